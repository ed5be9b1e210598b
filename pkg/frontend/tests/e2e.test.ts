// End-to-end against the real Python server: the client connects over a
// real WebSocket, a scripted keyboard sequence drives the humanoid through
// a solo rearrangement episode, the metrics banner must equal the
// server-side recording, and the replay viewer steps through the same
// episode in both camera modes.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, readdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { Session } from "../src/session.js";
import { ReplayViewer } from "../src/replay.js";
import { WebSocketTransport } from "../src/transport.js";
import type { StateMsg } from "../src/protocol.js";

const PY = process.env.PYTHON ?? "python3";
const PKG_ROOT = join(__dirname, "..", "..");

let server: ChildProcess;
let port: number;
let recDir: string;

function wrapAngle(a: number): number {
  while (a > Math.PI) a -= 2 * Math.PI;
  while (a <= -Math.PI) a += 2 * Math.PI;
  return a;
}

beforeAll(async () => {
  recDir = mkdtempSync(join(tmpdir(), "tandemsim-rec-"));
  server = spawn(PY, ["-c", `
import sys
from tandemsim.hitl.server import HitlServer, ServerConfig
cfg = ServerConfig(port=0, tick_rate=40.0, episodes=1, scene_id="small_f",
                   recordings_dir=${JSON.stringify("REC")}.replace("REC", sys.argv[1]),
                   condition="solo", max_steps=3000)
srv = HitlServer(cfg)
thread, port = srv.start_background()
print(f"PORT={port}", flush=True)
thread.join()
`, recDir], { cwd: PKG_ROOT, stdio: ["ignore", "pipe", "inherit"] });
  port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 30_000);
    server.stdout!.on("data", (chunk: Buffer) => {
      const m = /PORT=(\d+)/.exec(chunk.toString());
      if (m) {
        clearTimeout(timer);
        resolve(parseInt(m[1], 10));
      }
    });
  });
}, 40_000);

afterAll(() => {
  server?.kill();
});

interface Goal {
  object_id: string;
  goal: number[];
}

/** Keyboard-only pursuit: turn toward the target, advance, stop in reach
 * range facing it, then tap pick/place. */
function drive(session: Session, goals: Goal[], snapshot: StateMsg, tick: number): void {
  const hum = snapshot.agents.human_0;
  let current: Goal | null = null;
  for (const g of goals) {
    const obj = snapshot.objects[g.object_id];
    if (obj && !obj.at_goal) {
      current = g;
      break;
    }
  }
  if (!current) return;
  if (tick % 150 === 0 && process.env.E2E_DEBUG) {
    const o = snapshot.objects[current.object_id];
    console.log(`t=${snapshot.t} target=${current.object_id} parent=${o.parent} ` +
      `hum=(${hum.x.toFixed(2)},${hum.y.toFixed(2)},${hum.heading.toFixed(2)}) hold=${hum.holding}`);
  }
  const obj = snapshot.objects[current.object_id];
  const held = obj.parent[0] === "held";
  const target = held ? current.goal : obj.pos;
  const dx = target[0] - hum.x;
  const dy = target[1] - hum.y;
  const dist = Math.hypot(dx, dy);
  const err = wrapAngle(Math.atan2(dy, dx) - hum.heading);
  const release = () => {
    for (const code of ["KeyW", "KeyS", "KeyA", "KeyD"]) session.handleKeyUp(code);
  };
  release();
  if (dist > 0.62) {
    if (Math.abs(err) > 0.25) {
      session.handleKeyDown(err > 0 ? "KeyA" : "KeyD");
    } else {
      session.handleKeyDown("KeyW");
      if (Math.abs(err) > 0.1) session.handleKeyDown(err > 0 ? "KeyA" : "KeyD");
    }
  } else if (dist < 0.42) {
    session.handleKeyDown("KeyS"); // too close to reach over the surface: back up
  } else if (Math.abs(err) > 0.09) {
    session.handleKeyDown(err > 0 ? "KeyA" : "KeyD");
  } else if (tick % 4 === 0) {
    session.handleKeyDown(held ? "KeyQ" : "KeyE");
  }
  session.pumpInput();
}

describe("live server E2E", () => {
  let banner: { terminal: string; metrics: Record<string, number | null> };

  it("completes a solo episode with a scripted keyboard sequence", async () => {
    const ws = new WebSocket(`ws://127.0.0.1:${port}`);
    const transport = new WebSocketTransport(ws as never);
    const session = new Session(transport, "p_e2e", "solo");
    let tick = 0;
    await new Promise<void>((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("episode did not finish")), 120_000);
      session.onChange((vm) => {
        if (vm.banner) {
          clearTimeout(timer);
          resolve();
          return;
        }
        if (vm.snapshot && vm.goals.length) {
          tick += 1;
          drive(session, vm.goals, vm.snapshot, tick);
        }
      });
    });
    banner = session.vm.banner!;
    session.close();
    expect(banner.terminal).toBe("success");
    expect(banner.metrics.success).toBe(1);
  }, 150_000);

  it("banner matches the server-side recording", () => {
    const files = readdirSync(recDir).filter((f) => f.endsWith(".rec"));
    expect(files.length).toBe(1);
    const lines = readFileSync(join(recDir, files[0]), "utf-8").trim().split("\n");
    const end = JSON.parse(lines[lines.length - 1]);
    expect(end.lv).toBe("end");
    expect(end.terminal).toBe(banner.terminal);
    expect(end.metrics).toEqual(banner.metrics);
  });

  it("replay viewer steps through the episode in both camera modes", async () => {
    const recPath = join(recDir, readdirSync(recDir).filter((f) => f.endsWith(".rec"))[0]);

    async function view(camera: "topdown" | "egocentric") {
      const ws = new WebSocket(`ws://127.0.0.1:${port}`);
      const transport = new WebSocketTransport(ws as never);
      const viewer = new ReplayViewer(transport);
      if (camera === "egocentric") viewer.toggleCamera();
      await new Promise<void>((resolve, reject) => {
        const timer = setTimeout(() => reject(new Error("replay stalled")), 60_000);
        viewer.onChange((st) => {
          if (st.totalFrames > 0 && st.frames.length === 0 && !st.done) {
            viewer.fetchFrames("playback");
          }
          if (st.done) {
            clearTimeout(timer);
            resolve();
          }
        });
        viewer.load(recPath);
      });
      // step through every frame via the scrubber
      for (let k = 0; k < viewer.state.frames.length; k++) {
        viewer.scrubTo(k);
        const frame = viewer.currentFrame()!;
        expect(frame.frame).toBe(k);
        expect(frame.camera.mode).toBe(camera); // server echoes the requested view
      }
      expect(viewer.state.camera).toBe(camera);
      expect(viewer.state.frames.length).toBeGreaterThan(50);
      const res = viewer.state.frames.length;
      viewer.close();
      return res;
    }

    const topdown = await view("topdown");
    const ego = await view("egocentric");
    expect(topdown).toBe(ego);
  }, 150_000);
});
