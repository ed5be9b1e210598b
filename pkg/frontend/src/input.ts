// Keyboard/pointer capture -> input messages. The client tick (20 Hz,
// decoupled from the server tick) coalesces key state; one-shot actions go
// out immediately so they are never lost between ticks.

import type { InputMsg } from "./protocol.js";

const KEY_TO_MOVE: Record<string, string> = {
  KeyW: "w", ArrowUp: "w",
  KeyS: "s", ArrowDown: "s",
  KeyA: "a", ArrowLeft: "a",
  KeyD: "d", ArrowRight: "d",
};

export const PICK_KEY = "KeyE";
export const PLACE_KEY = "KeyQ";
export const CAMERA_KEY = "KeyC";

export class InputController {
  private held = new Set<string>();
  private dirty = false;
  private pending: InputMsg[] = [];

  keyDown(code: string): "camera" | null {
    if (code === CAMERA_KEY) return "camera";
    if (code === PICK_KEY) {
      this.pending.push({ type: "input", action: "pick" });
      return null;
    }
    if (code === PLACE_KEY) {
      this.pending.push({ type: "input", action: "place" });
      return null;
    }
    const move = KEY_TO_MOVE[code];
    if (move && !this.held.has(move)) {
      this.held.add(move);
      this.dirty = true;
    }
    return null;
  }

  keyUp(code: string): void {
    const move = KEY_TO_MOVE[code];
    if (move && this.held.delete(move)) {
      this.dirty = true;
    }
  }

  click(world: [number, number]): void {
    this.pending.push({ type: "input", click: [world[0], world[1]] });
    this.held.clear();
    this.dirty = false;
  }

  /** Messages to send this client tick (latest key state + queued one-shots). */
  flush(): InputMsg[] {
    const out = [...this.pending];
    this.pending = [];
    if (this.dirty) {
      out.push({ type: "input", keys: [...this.held].sort() });
      this.dirty = false;
    }
    return out;
  }

  heldKeys(): string[] {
    return [...this.held].sort();
  }
}
