import { describe, expect, it } from "vitest";

import { InputController } from "../src/input.js";
import {
  decodeServer,
  encodeHello,
  encodeInput,
  ProtocolError,
  type SceneDoc,
  type StateMsg,
} from "../src/protocol.js";
import { makeCamera, render, screenToWorld, worldToScreen } from "../src/renderer.js";
import { FakeTransport } from "../src/transport.js";
import { ReplayViewer, frameToSnapshot } from "../src/replay.js";
import { Session } from "../src/session.js";
import { bannerText, initialViewModel, reduce, toggleCamera } from "../src/viewmodel.js";

const SCENE: SceneDoc = {
  schema: "scene/1",
  id: "mini",
  size_class: "small",
  bounds: [0, 0, 8, 6],
  walls: [[4, 0, 4, 2]],
  receptacles: [{ name: "t0", rect: [1, 1, 2, 1.5], height: 0.9, open: true }],
  spawn_regions: [],
};

const STATE: StateMsg = {
  type: "state",
  t: 3,
  agents: {
    human_0: { x: 2, y: 2, heading: 0, kind: "humanoid", holding: null },
    robot_0: { x: 5, y: 4, heading: Math.PI / 2, kind: "robot", holding: null },
  },
  objects: {
    obj_0: { pos: [1.5, 1.25, 0.9], parent: ["receptacle", "t0"], at_goal: false },
  },
  events: {},
  hash: "00",
};

describe("protocol", () => {
  it("decodes known server messages", () => {
    const msg = decodeServer(JSON.stringify({ type: "warning", reason: "x" }));
    expect(msg.type).toBe("warning");
  });
  it("rejects garbage and unknown types", () => {
    expect(() => decodeServer("{nope")).toThrow(ProtocolError);
    expect(() => decodeServer(JSON.stringify({ type: "nope" }))).toThrow(ProtocolError);
  });
  it("encodes hello and input", () => {
    expect(JSON.parse(encodeHello("p0", "solo"))).toMatchObject({
      type: "hello", protocol: "hitl/1", participant: "p0", condition: "solo",
    });
    expect(JSON.parse(encodeInput({ type: "input", keys: ["w"] }))).toEqual({
      type: "input", keys: ["w"],
    });
  });
});

describe("viewmodel", () => {
  it("tracks the session lifecycle and keeps only the latest snapshot", () => {
    let vm = initialViewModel();
    vm = reduce(vm, { type: "hello_ok", session: "s0", condition: "solo", tick_rate: 10, episodes: 1 });
    vm = reduce(vm, { type: "scene", scene: SCENE });
    vm = reduce(vm, { type: "episode_start", episode: 0, spec: {}, goals: [] });
    vm = reduce(vm, STATE);
    vm = reduce(vm, { ...STATE, t: 4 });
    expect(vm.snapshot?.t).toBe(4);
    vm = reduce(vm, {
      type: "episode_end", episode: 0, terminal: "success",
      metrics: { TS: 188, collision: 0, RC: null, success: 1 },
    });
    expect(vm.banner?.terminal).toBe("success");
    expect(bannerText(vm.banner!)).toContain("TS=188");
  });
  it("bounds the warning backlog", () => {
    let vm = initialViewModel();
    for (let i = 0; i < 20; i++) vm = reduce(vm, { type: "warning", reason: `w${i}` });
    expect(vm.warnings.length).toBeLessThanOrEqual(5);
    expect(vm.warnings.at(-1)).toBe("w19");
  });
  it("toggles the camera", () => {
    let vm = initialViewModel();
    vm = toggleCamera(vm);
    expect(vm.camera).toBe("egocentric");
  });
});

describe("renderer", () => {
  const viewport = { width: 800, height: 600 };
  it("is a pure function of its inputs", () => {
    const cam = makeCamera(SCENE, STATE, "topdown", viewport);
    const a = render(SCENE, STATE, [], cam, viewport);
    const b = render(SCENE, STATE, [], cam, viewport);
    expect(a).toEqual(b);
    expect(a[0]).toEqual({ op: "clear", color: expect.any(String) });
  });
  it("world<->screen round trips", () => {
    const cam = makeCamera(SCENE, STATE, "topdown", viewport);
    const p: [number, number] = [3.2, 4.7];
    const back = screenToWorld(cam, viewport, worldToScreen(cam, viewport, p));
    expect(back[0]).toBeCloseTo(p[0], 9);
    expect(back[1]).toBeCloseTo(p[1], 9);
  });
  it("egocentric camera centers and rotates on the robot", () => {
    const cam = makeCamera(SCENE, STATE, "egocentric", viewport);
    expect(cam.mode).toBe("egocentric");
    const robotScreen = worldToScreen(cam, viewport, [5, 4]);
    expect(robotScreen[0]).toBeCloseTo(viewport.width / 2, 6);
    expect(robotScreen[1]).toBeCloseTo(viewport.height / 2, 6);
    // a point ahead of the robot (heading pi/2 -> +y) appears straight up
    const ahead = worldToScreen(cam, viewport, [5, 5]);
    expect(ahead[0]).toBeCloseTo(viewport.width / 2, 6);
    expect(ahead[1]).toBeLessThan(viewport.height / 2);
  });
  it("draws goal-direction markers for open goals", () => {
    const cam = makeCamera(SCENE, STATE, "topdown", viewport);
    const goals = [{ object_id: "obj_0", goal: [7, 5, 0.9] }];
    const ops = render(SCENE, STATE, goals, cam, viewport);
    const lines = ops.filter((o) => o.op === "line");
    // walls(1) + boundary(4) + one direction marker
    expect(lines.length).toBe(6);
  });
});

describe("input", () => {
  it("maps wasd to held keys and coalesces per flush", () => {
    const inp = new InputController();
    inp.keyDown("KeyW");
    inp.keyDown("KeyA");
    expect(inp.flush()).toEqual([{ type: "input", keys: ["a", "w"] }]);
    expect(inp.flush()).toEqual([]); // unchanged state sends nothing
    inp.keyUp("KeyA");
    expect(inp.flush()).toEqual([{ type: "input", keys: ["w"] }]);
  });
  it("emits one-shot pick/place immediately on flush", () => {
    const inp = new InputController();
    inp.keyDown("KeyE");
    inp.keyDown("KeyQ");
    expect(inp.flush()).toEqual([
      { type: "input", action: "pick" },
      { type: "input", action: "place" },
    ]);
  });
  it("click clears held keys", () => {
    const inp = new InputController();
    inp.keyDown("KeyW");
    inp.flush();
    inp.click([1.5, 2.5]);
    expect(inp.flush()).toEqual([{ type: "input", click: [1.5, 2.5] }]);
    expect(inp.heldKeys()).toEqual([]);
  });
});

describe("session over a fake transport", () => {
  it("handshakes and surfaces the banner", () => {
    const t = new FakeTransport();
    const s = new Session(t, "p0", "solo");
    expect(JSON.parse(t.sent[0]).type).toBe("hello");
    t.deliver(JSON.stringify({ type: "hello_ok", session: "s0", condition: "solo", tick_rate: 0, episodes: 1 }));
    t.deliver(JSON.stringify({ type: "scene", scene: SCENE }));
    t.deliver(JSON.stringify({ type: "episode_start", episode: 0, spec: {}, goals: [] }));
    t.deliver(JSON.stringify(STATE));
    s.handleKeyDown("KeyW");
    s.pumpInput();
    const sent = t.sent.map((raw) => JSON.parse(raw));
    expect(sent.at(-1)).toEqual({ type: "input", keys: ["w"] });
    t.deliver(JSON.stringify({
      type: "episode_end", episode: 0, terminal: "success",
      metrics: { TS: 42, collision: 0, RC: null, success: 1 },
    }));
    expect(s.vm.banner?.metrics.TS).toBe(42);
    expect(s.handleKeyDown("KeyC")).toBe(true);
    expect(s.vm.camera).toBe("egocentric");
  });
});

describe("replay viewer", () => {
  function frame(k: number) {
    return JSON.stringify({
      type: "replay_frame", frame: k, t: k + 1,
      agents: { human_0: { x: k, y: 0, heading: 0, holding: null } },
      objects: {}, hash: `${k}`, camera: { mode: "topdown", pose: null },
    });
  }
  it("loads, scrubs, plays at speed, and toggles camera", () => {
    const t = new FakeTransport();
    const v = new ReplayViewer(t);
    expect(JSON.parse(t.sent[0]).mode).toBe("replay");
    v.load("rec/x.rec");
    t.deliver(JSON.stringify({ type: "scene", scene: SCENE }));
    t.deliver(JSON.stringify({ type: "replay_ctl", cmd: "loaded", frames: 5 }));
    v.fetchFrames();
    for (let k = 0; k < 5; k++) t.deliver(frame(k));
    t.deliver(JSON.stringify({ type: "replay_end" }));
    expect(v.state.frames.length).toBe(5);
    expect(v.state.done).toBe(true);
    v.scrubTo(3);
    expect(v.currentFrame()?.frame).toBe(3);
    v.scrubTo(99);
    expect(v.currentFrame()?.frame).toBe(4);
    v.scrubTo(0);
    v.setSpeed(2);
    v.setPlaying(true);
    v.tick();
    expect(Math.floor(v.state.cursor)).toBe(2);
    v.toggleCamera();
    expect(v.state.camera).toBe("egocentric");
    const snap = frameToSnapshot(v.currentFrame()!);
    expect(snap.agents.human_0.kind).toBe("humanoid");
  });
});
