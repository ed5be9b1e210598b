// Live teleoperation session: transport + reducer + input pump, no DOM.

import { InputController } from "./input.js";
import { decodeServer, encodeHello, encodeInput } from "./protocol.js";
import type { Transport } from "./transport.js";
import { initialViewModel, reduce, toggleCamera, type ViewModel } from "./viewmodel.js";

export const CLIENT_TICK_MS = 50; // 20 Hz, decoupled from the server tick

export class Session {
  vm: ViewModel = initialViewModel();
  input = new InputController();
  private listeners: ((vm: ViewModel) => void)[] = [];

  constructor(private transport: Transport, participant: string, condition?: string) {
    transport.onMessage((raw) => {
      this.vm = reduce(this.vm, decodeServer(raw));
      this.emit();
    });
    transport.onClose(() => {
      this.vm = { ...this.vm, connection: "closed" };
      this.emit();
    });
    transport.send(encodeHello(participant, condition));
  }

  onChange(cb: (vm: ViewModel) => void): void {
    this.listeners.push(cb);
  }

  private emit(): void {
    for (const cb of this.listeners) cb(this.vm);
  }

  /** Forward a keyboard event; returns true when the event was consumed. */
  handleKeyDown(code: string): boolean {
    const special = this.input.keyDown(code);
    if (special === "camera") {
      this.vm = toggleCamera(this.vm);
      this.emit();
    }
    return special !== null || this.input.heldKeys().length > 0 ||
      code === "KeyE" || code === "KeyQ";
  }

  handleKeyUp(code: string): void {
    this.input.keyUp(code);
  }

  handleClick(world: [number, number]): void {
    this.input.click(world);
  }

  /** Called once per client tick: pushes coalesced input to the server. */
  pumpInput(): void {
    for (const msg of this.input.flush()) {
      this.transport.send(encodeInput(msg));
    }
  }

  close(): void {
    this.transport.close();
  }
}
