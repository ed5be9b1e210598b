// Client-side session state: a pure reducer over server messages. Only the
// latest snapshot is kept (no interpolation backlog), so render cost is
// constant regardless of network burstiness.

import type {
  EpisodeEndMsg,
  GoalSpec,
  SceneDoc,
  ServerMsg,
  StateMsg,
} from "./protocol.js";

export interface Banner {
  episode: number;
  terminal: string;
  metrics: Record<string, number | null>;
}

export type CameraMode = "topdown" | "egocentric";

export interface ViewModel {
  connection: "connecting" | "ready" | "closed";
  condition: string;
  scene: SceneDoc | null;
  episode: number | null;
  goals: GoalSpec[];
  snapshot: StateMsg | null;
  banner: Banner | null;
  warnings: string[];
  camera: CameraMode;
  sessionOver: boolean;
}

export function initialViewModel(): ViewModel {
  return {
    connection: "connecting",
    condition: "",
    scene: null,
    episode: null,
    goals: [],
    snapshot: null,
    banner: null,
    warnings: [],
    camera: "topdown",
    sessionOver: false,
  };
}

const MAX_WARNINGS = 5;

export function reduce(vm: ViewModel, msg: ServerMsg): ViewModel {
  switch (msg.type) {
    case "hello_ok":
      return { ...vm, connection: "ready", condition: msg.condition };
    case "scene":
      return { ...vm, scene: msg.scene };
    case "episode_start":
      return { ...vm, episode: msg.episode, goals: msg.goals, banner: null, snapshot: null };
    case "state":
      return { ...vm, snapshot: msg };
    case "episode_end": {
      const end = msg as EpisodeEndMsg;
      return { ...vm, banner: { episode: end.episode, terminal: end.terminal, metrics: end.metrics } };
    }
    case "warning":
      return { ...vm, warnings: [...vm.warnings.slice(-(MAX_WARNINGS - 1)), msg.reason] };
    case "session_end":
      return { ...vm, sessionOver: true };
    case "error":
      return { ...vm, warnings: [...vm.warnings, msg.reason], connection: "closed" };
    default:
      return vm;
  }
}

export function toggleCamera(vm: ViewModel): ViewModel {
  return { ...vm, camera: vm.camera === "topdown" ? "egocentric" : "topdown" };
}

export function bannerText(b: Banner): string {
  const parts = [`episode ${b.episode}: ${b.terminal}`];
  const m = b.metrics;
  if (m.TS != null) parts.push(`TS=${m.TS}`);
  if (m.collision != null) parts.push(`collisions=${m.collision}`);
  if (m.RC != null) parts.push(`RC=${m.RC}`);
  return parts.join("  ");
}
