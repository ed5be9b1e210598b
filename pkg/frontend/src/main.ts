// Browser entry point: wires the session (or replay viewer) to the canvas.

import { CLIENT_TICK_MS, Session } from "./session.js";
import { ReplayViewer, frameToSnapshot } from "./replay.js";
import { makeCamera, paint, render, screenToWorld, type Viewport } from "./renderer.js";
import { WebSocketTransport } from "./transport.js";
import { bannerText } from "./viewmodel.js";

function getParams() {
  const q = new URLSearchParams(window.location.search);
  return {
    server: q.get("server") ?? `ws://${window.location.hostname || "127.0.0.1"}:8765`,
    participant: q.get("participant") ?? "web",
    condition: q.get("condition") ?? undefined,
    replay: q.get("replay"),
  };
}

function main(): void {
  const params = getParams();
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const hud = document.getElementById("hud") as HTMLDivElement;
  const ctx = canvas.getContext("2d")!;
  const viewport: Viewport = { width: canvas.width, height: canvas.height };
  const transport = new WebSocketTransport(new WebSocket(params.server));

  if (params.replay) {
    const viewer = new ReplayViewer(transport);
    viewer.load(params.replay);
    viewer.onChange((st) => {
      if (st.totalFrames > 0 && st.frames.length === 0 && !st.done) {
        viewer.fetchFrames("playback");
        viewer.setPlaying(true);
      }
    });
    const draw = () => {
      const frame = viewer.tick();
      const st = viewer.state;
      if (st.scene && frame) {
        const snapshot = frameToSnapshot(frame);
        const cam = makeCamera(st.scene, snapshot, st.camera, viewport);
        paint(ctx, viewport, render(st.scene, snapshot, [], cam, viewport));
        hud.textContent =
          `frame ${Math.floor(st.cursor)}/${st.frames.length - 1}  ` +
          `${st.playing ? "playing" : "paused"} x${st.speed}  camera=${st.camera}  ` +
          `[space] play/pause  [c] camera  [←/→] scrub`;
      }
      requestAnimationFrame(draw);
    };
    window.addEventListener("keydown", (ev) => {
      if (ev.code === "Space") viewer.setPlaying(!viewer.state.playing);
      if (ev.code === "KeyC") viewer.toggleCamera();
      if (ev.code === "ArrowRight") viewer.scrubTo(Math.floor(viewer.state.cursor) + 10);
      if (ev.code === "ArrowLeft") viewer.scrubTo(Math.floor(viewer.state.cursor) - 10);
    });
    requestAnimationFrame(draw);
    return;
  }

  const session = new Session(transport, params.participant, params.condition);
  window.addEventListener("keydown", (ev) => {
    if (session.handleKeyDown(ev.code)) ev.preventDefault();
  });
  window.addEventListener("keyup", (ev) => session.handleKeyUp(ev.code));
  canvas.addEventListener("click", (ev) => {
    const vm = session.vm;
    if (!vm.scene) return;
    const rect = canvas.getBoundingClientRect();
    const cam = makeCamera(vm.scene, vm.snapshot, vm.camera, viewport);
    const world = screenToWorld(cam, viewport, [ev.clientX - rect.left, ev.clientY - rect.top]);
    session.handleClick(world);
  });
  setInterval(() => session.pumpInput(), CLIENT_TICK_MS);
  const draw = () => {
    const vm = session.vm;
    if (vm.scene) {
      const cam = makeCamera(vm.scene, vm.snapshot, vm.camera, viewport);
      paint(ctx, viewport, render(vm.scene, vm.snapshot, vm.goals, cam, viewport));
    }
    const lines = [
      `connection=${vm.connection}  condition=${vm.condition}  camera=${vm.camera}`,
      `episode=${vm.episode ?? "-"}  [wasd] drive  [click] navigate  [e] pick  [q] place  [c] camera`,
    ];
    if (vm.banner) lines.push(bannerText(vm.banner));
    if (vm.warnings.length) lines.push(`warning: ${vm.warnings[vm.warnings.length - 1]}`);
    if (vm.sessionOver) lines.push("session complete");
    hud.textContent = lines.join("\n");
    requestAnimationFrame(draw);
  };
  requestAnimationFrame(draw);
}

main();
