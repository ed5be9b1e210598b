// Wire protocol hitl/1 (see ../docs/protocol.md). One JSON object per
// WebSocket text frame; this module is the single codec for the client.

export const PROTOCOL = "hitl/1";

export interface AgentSnapshot {
  x: number;
  y: number;
  heading: number;
  kind: "robot" | "humanoid";
  holding: string | null;
  hand?: number[];
}

export interface ObjectSnapshot {
  pos: number[];
  parent: [string, string];
  at_goal: boolean;
}

export interface StateMsg {
  type: "state";
  t: number;
  agents: Record<string, AgentSnapshot>;
  objects: Record<string, ObjectSnapshot>;
  events: {
    collisions?: string[][];
    picks?: unknown[][];
    places?: unknown[][];
    warnings?: unknown[][];
  };
  hash: string;
}

export interface SceneDoc {
  schema: string;
  id: string;
  size_class: string;
  bounds: [number, number, number, number];
  walls: number[][];
  receptacles: { name: string; rect: number[]; height: number; open: boolean }[];
  spawn_regions: number[][];
}

export interface GoalSpec {
  object_id: string;
  start: number[];
  goal: number[];
}

export interface EpisodeStartMsg {
  type: "episode_start";
  episode: number;
  spec: unknown;
  goals: GoalSpec[];
}

export interface EpisodeEndMsg {
  type: "episode_end";
  episode: number;
  terminal: string;
  metrics: Record<string, number | null>;
}

export interface ReplayFrameMsg {
  type: "replay_frame";
  frame: number;
  t: number;
  agents: Record<string, { x: number; y: number; heading: number; holding: string | null }>;
  objects: Record<string, { pos: number[]; parent: string[] }>;
  hash: string;
  camera: { mode: string; pose: number[] | null };
}

export type ServerMsg =
  | { type: "hello_ok"; session: string; condition: string; tick_rate: number; episodes: number }
  | { type: "scene"; scene: SceneDoc }
  | EpisodeStartMsg
  | StateMsg
  | EpisodeEndMsg
  | { type: "warning"; reason: string }
  | { type: "error"; reason: string }
  | { type: "session_end" }
  | { type: "replay_ctl"; cmd: string; frames?: number }
  | ReplayFrameMsg
  | { type: "replay_end" };

export type InputMsg =
  | { type: "input"; keys: string[] }
  | { type: "input"; click: [number, number] }
  | { type: "input"; action: "pick" | "place" };

const SERVER_TYPES = new Set([
  "hello_ok", "scene", "episode_start", "state", "episode_end", "warning",
  "error", "session_end", "replay_ctl", "replay_frame", "replay_end",
]);

export class ProtocolError extends Error {}

export function decodeServer(raw: string): ServerMsg {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch (exc) {
    throw new ProtocolError(`malformed message: ${exc}`);
  }
  if (
    typeof parsed !== "object" || parsed === null ||
    !SERVER_TYPES.has((parsed as { type?: string }).type ?? "")
  ) {
    throw new ProtocolError(`unknown message type in ${raw.slice(0, 80)}`);
  }
  return parsed as ServerMsg;
}

export function encodeHello(participant: string, condition?: string, mode?: string): string {
  return JSON.stringify({
    type: "hello",
    protocol: PROTOCOL,
    participant,
    ...(condition ? { condition } : {}),
    ...(mode ? { mode } : {}),
  });
}

export function encodeInput(msg: InputMsg): string {
  return JSON.stringify(msg);
}

export function encodeReplayCtl(
  cmd: string,
  extra: Record<string, unknown> = {},
): string {
  return JSON.stringify({ type: "replay_ctl", cmd, ...extra });
}
