// Pure top-down renderer: (scene, snapshot, camera, viewport) -> draw ops.
// The op list keeps rendering testable without a DOM; paint() is the only
// canvas-touching function.

import type { SceneDoc, StateMsg } from "./protocol.js";
import type { CameraMode } from "./viewmodel.js";

export interface Viewport {
  width: number;
  height: number;
}

export interface Camera {
  mode: CameraMode;
  // world -> screen: screen = rot(theta) * (p - center) * scale + screen_center
  center: [number, number];
  scale: number;
  rotation: number;
}

export type DrawOp =
  | { op: "clear"; color: string }
  | { op: "line"; a: [number, number]; b: [number, number]; color: string; width: number }
  | { op: "rect"; corners: [number, number][]; color: string; fill: boolean }
  | { op: "disc"; c: [number, number]; r: number; color: string; fill: boolean }
  | { op: "wedge"; c: [number, number]; r: number; heading: number; color: string }
  | { op: "text"; at: [number, number]; text: string; color: string };

export function makeCamera(
  scene: SceneDoc,
  snapshot: StateMsg | null,
  mode: CameraMode,
  viewport: Viewport,
): Camera {
  const [x0, y0, x1, y1] = scene.bounds;
  if (mode === "egocentric" && snapshot) {
    const robot = Object.values(snapshot.agents).find((a) => a.kind === "robot");
    if (robot) {
      // viewport centered on the robot, rotated so its heading points up
      const scale = Math.min(viewport.width, viewport.height) / 8.0;
      return {
        mode,
        center: [robot.x, robot.y],
        scale,
        rotation: Math.PI / 2 - robot.heading,
      };
    }
  }
  const margin = 0.5;
  const scale = Math.min(
    viewport.width / (x1 - x0 + 2 * margin),
    viewport.height / (y1 - y0 + 2 * margin),
  );
  return { mode: "topdown", center: [(x0 + x1) / 2, (y0 + y1) / 2], scale, rotation: 0 };
}

export function worldToScreen(cam: Camera, viewport: Viewport, p: [number, number]): [number, number] {
  const dx = p[0] - cam.center[0];
  const dy = p[1] - cam.center[1];
  const c = Math.cos(cam.rotation);
  const s = Math.sin(cam.rotation);
  const rx = c * dx - s * dy;
  const ry = s * dx + c * dy;
  // world y grows up, screen y grows down
  return [viewport.width / 2 + rx * cam.scale, viewport.height / 2 - ry * cam.scale];
}

export function screenToWorld(cam: Camera, viewport: Viewport, p: [number, number]): [number, number] {
  const rx = (p[0] - viewport.width / 2) / cam.scale;
  const ry = -(p[1] - viewport.height / 2) / cam.scale;
  const c = Math.cos(-cam.rotation);
  const s = Math.sin(-cam.rotation);
  return [cam.center[0] + c * rx - s * ry, cam.center[1] + s * rx + c * ry];
}

const COLORS = {
  background: "#10151c",
  wall: "#9fb2c8",
  receptacle: "#43586e",
  object: "#ffb347",
  goal: "#59d98e",
  robot: "#6fb3ff",
  humanoid: "#ff8787",
  hand: "#ffd6d6",
};

export function render(
  scene: SceneDoc,
  snapshot: StateMsg | null,
  goals: { object_id: string; goal: number[] }[],
  cam: Camera,
  viewport: Viewport,
): DrawOp[] {
  const ops: DrawOp[] = [{ op: "clear", color: COLORS.background }];
  const w2s = (p: [number, number]) => worldToScreen(cam, viewport, p);
  const [x0, y0, x1, y1] = scene.bounds;
  const boundary = [
    [x0, y0, x1, y0], [x1, y0, x1, y1], [x1, y1, x0, y1], [x0, y1, x0, y0],
  ];
  for (const [ax, ay, bx, by] of [...boundary, ...scene.walls]) {
    ops.push({ op: "line", a: w2s([ax, ay]), b: w2s([bx, by]), color: COLORS.wall, width: 2 });
  }
  for (const rec of scene.receptacles) {
    const [rx0, ry0, rx1, ry1] = rec.rect;
    ops.push({
      op: "rect",
      corners: [w2s([rx0, ry0]), w2s([rx1, ry0]), w2s([rx1, ry1]), w2s([rx0, ry1])],
      color: COLORS.receptacle,
      fill: true,
    });
  }
  for (const g of goals) {
    ops.push({
      op: "disc", c: w2s([g.goal[0], g.goal[1]]), r: 0.18 * cam.scale,
      color: COLORS.goal, fill: false,
    });
  }
  if (snapshot) {
    for (const [oid, obj] of Object.entries(snapshot.objects)) {
      ops.push({
        op: "disc", c: w2s([obj.pos[0], obj.pos[1]]), r: 0.1 * cam.scale,
        color: obj.at_goal ? COLORS.goal : COLORS.object, fill: true,
      });
      void oid;
    }
    // goal-direction markers from the humanoid toward open goals
    const hum = Object.values(snapshot.agents).find((a) => a.kind === "humanoid");
    if (hum) {
      for (const g of goals) {
        const obj = snapshot.objects[g.object_id];
        if (!obj || obj.at_goal) continue;
        const target = obj.parent[0] === "held" ? g.goal : obj.pos;
        const d = Math.hypot(target[0] - hum.x, target[1] - hum.y);
        if (d < 1e-6) continue;
        const ux = (target[0] - hum.x) / d;
        const uy = (target[1] - hum.y) / d;
        ops.push({
          op: "line",
          a: w2s([hum.x + 0.4 * ux, hum.y + 0.4 * uy]),
          b: w2s([hum.x + 0.8 * ux, hum.y + 0.8 * uy]),
          color: obj.parent[0] === "held" ? COLORS.goal : COLORS.object,
          width: 2,
        });
      }
    }
    for (const agent of Object.values(snapshot.agents)) {
      const color = agent.kind === "robot" ? COLORS.robot : COLORS.humanoid;
      ops.push({ op: "disc", c: w2s([agent.x, agent.y]), r: 0.3 * cam.scale, color, fill: true });
      ops.push({
        op: "wedge", c: w2s([agent.x, agent.y]), r: 0.3 * cam.scale,
        heading: agent.heading + cam.rotation, color: "#ffffff",
      });
      if (agent.hand) {
        ops.push({
          op: "disc", c: w2s([agent.hand[0], agent.hand[1]]), r: 0.06 * cam.scale,
          color: COLORS.hand, fill: true,
        });
      }
    }
  }
  return ops;
}

export function paint(ctx: CanvasRenderingContext2D, viewport: Viewport, ops: DrawOp[]): void {
  for (const op of ops) {
    switch (op.op) {
      case "clear":
        ctx.fillStyle = op.color;
        ctx.fillRect(0, 0, viewport.width, viewport.height);
        break;
      case "line":
        ctx.strokeStyle = op.color;
        ctx.lineWidth = op.width;
        ctx.beginPath();
        ctx.moveTo(op.a[0], op.a[1]);
        ctx.lineTo(op.b[0], op.b[1]);
        ctx.stroke();
        break;
      case "rect":
        ctx.beginPath();
        ctx.moveTo(op.corners[0][0], op.corners[0][1]);
        for (const c of op.corners.slice(1)) ctx.lineTo(c[0], c[1]);
        ctx.closePath();
        if (op.fill) {
          ctx.fillStyle = op.color;
          ctx.fill();
        } else {
          ctx.strokeStyle = op.color;
          ctx.stroke();
        }
        break;
      case "disc":
        ctx.beginPath();
        ctx.arc(op.c[0], op.c[1], op.r, 0, 2 * Math.PI);
        if (op.fill) {
          ctx.fillStyle = op.color;
          ctx.fill();
        } else {
          ctx.strokeStyle = op.color;
          ctx.lineWidth = 2;
          ctx.stroke();
        }
        break;
      case "wedge": {
        // heading marker; screen y is flipped, so negate the angle
        const a = -op.heading;
        ctx.strokeStyle = op.color;
        ctx.lineWidth = 2;
        ctx.beginPath();
        ctx.moveTo(op.c[0], op.c[1]);
        ctx.lineTo(op.c[0] + op.r * Math.cos(a), op.c[1] + op.r * Math.sin(a));
        ctx.stroke();
        break;
      }
      case "text":
        ctx.fillStyle = op.color;
        ctx.font = "14px monospace";
        ctx.fillText(op.text, op.at[0], op.at[1]);
        break;
    }
  }
}
