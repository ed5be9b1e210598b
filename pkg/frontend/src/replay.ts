// Replay viewer state machine: loads a recording through the server's
// replay mode, buffers frames, and exposes play/pause/seek/speed plus the
// camera toggle. Pure logic; rendering reuses the live renderer by adapting
// frames into state snapshots.

import {
  decodeServer,
  encodeHello,
  encodeReplayCtl,
  type ReplayFrameMsg,
  type SceneDoc,
  type StateMsg,
} from "./protocol.js";
import type { Transport } from "./transport.js";
import type { CameraMode } from "./viewmodel.js";

export interface ReplayState {
  scene: SceneDoc | null;
  frames: ReplayFrameMsg[];
  totalFrames: number;
  cursor: number;
  playing: boolean;
  speed: number;
  camera: CameraMode;
  done: boolean;
}

export class ReplayViewer {
  state: ReplayState = {
    scene: null, frames: [], totalFrames: 0, cursor: 0,
    playing: false, speed: 1, camera: "topdown", done: false,
  };
  private listeners: ((st: ReplayState) => void)[] = [];

  constructor(private transport: Transport, participant = "viewer") {
    transport.onMessage((raw) => this.handle(raw));
    transport.send(encodeHello(participant, undefined, "replay"));
  }

  private handle(raw: string): void {
    const msg = decodeServer(raw);
    switch (msg.type) {
      case "scene":
        this.state = { ...this.state, scene: msg.scene };
        break;
      case "replay_ctl":
        if (msg.cmd === "loaded") {
          this.state = { ...this.state, totalFrames: msg.frames ?? 0, frames: [], cursor: 0 };
        }
        break;
      case "replay_frame":
        this.state = { ...this.state, frames: [...this.state.frames, msg] };
        break;
      case "replay_end":
        this.state = { ...this.state, done: true };
        break;
      default:
        return;
    }
    this.emit();
  }

  onChange(cb: (st: ReplayState) => void): void {
    this.listeners.push(cb);
  }

  private emit(): void {
    for (const cb of this.listeners) cb(this.state);
  }

  load(path: string): void {
    this.transport.send(encodeReplayCtl("load", { path }));
  }

  fetchFrames(mode: "playback" | "resimulate" = "playback"): void {
    this.transport.send(encodeReplayCtl("play", { mode, camera: this.state.camera }));
  }

  setPlaying(playing: boolean): void {
    this.state = { ...this.state, playing };
    this.emit();
  }

  setSpeed(speed: number): void {
    this.state = { ...this.state, speed };
    this.emit();
  }

  toggleCamera(): void {
    this.state = {
      ...this.state,
      camera: this.state.camera === "topdown" ? "egocentric" : "topdown",
    };
    this.emit();
  }

  scrubTo(frame: number): void {
    const cursor = Math.max(0, Math.min(frame, this.state.frames.length - 1));
    this.state = { ...this.state, cursor, playing: false };
    this.emit();
  }

  /** Advance the cursor on an animation tick; returns the current frame. */
  tick(): ReplayFrameMsg | null {
    if (this.state.playing && this.state.frames.length > 0) {
      const next = this.state.cursor + this.state.speed;
      if (next >= this.state.frames.length) {
        this.state = { ...this.state, cursor: this.state.frames.length - 1, playing: false };
      } else {
        this.state = { ...this.state, cursor: next };
      }
      this.emit();
    }
    return this.currentFrame();
  }

  currentFrame(): ReplayFrameMsg | null {
    return this.state.frames[Math.floor(this.state.cursor)] ?? null;
  }

  close(): void {
    this.transport.send(encodeReplayCtl("close"));
    this.transport.close();
  }
}

/** Adapt a replay frame into the live-state shape the renderer consumes. */
export function frameToSnapshot(frame: ReplayFrameMsg): StateMsg {
  const agents: StateMsg["agents"] = {};
  for (const [aid, a] of Object.entries(frame.agents)) {
    agents[aid] = {
      x: a.x, y: a.y, heading: a.heading,
      kind: aid.startsWith("robot") ? "robot" : "humanoid",
      holding: a.holding,
    };
  }
  const objects: StateMsg["objects"] = {};
  for (const [oid, o] of Object.entries(frame.objects)) {
    objects[oid] = {
      pos: o.pos,
      parent: [o.parent[0] ?? "", o.parent[1] ?? ""],
      at_goal: o.parent[0] === "goal",
    };
  }
  return { type: "state", t: frame.t, agents, objects, events: {}, hash: frame.hash };
}
