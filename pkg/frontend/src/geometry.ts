/** Pure geometry for drawing control-field trajectories over boundary
 * frames. Paths stay in the field's native pixel space; the SVG viewBox
 * does the scaling, so no coordinate is recomputed client-side. */

import type { ControlFieldDoc, TrajectoryPoint } from "./types.js";

export interface Box {
  width: number;
  height: number;
}

export interface FitTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** Scale-to-fit with letterboxing; centers the content in the frame. */
export function fitContain(content: Box, frame: Box): FitTransform {
  if (content.width <= 0 || content.height <= 0) {
    throw new Error("content box must have positive dimensions");
  }
  const scale = Math.min(
    frame.width / content.width,
    frame.height / content.height,
  );
  return {
    scale,
    offsetX: (frame.width - content.width * scale) / 2,
    offsetY: (frame.height - content.height * scale) / 2,
  };
}

export function project(
  transform: FitTransform,
  x: number,
  y: number,
): [number, number] {
  return [
    transform.offsetX + x * transform.scale,
    transform.offsetY + y * transform.scale,
  ];
}

export function viewBoxOf(field: ControlFieldDoc): string {
  return `0 0 ${field.width} ${field.height}`;
}

const fixed = (value: number): string =>
  Number(value.toFixed(2)).toString();

/** SVG path data visiting every trajectory sample in frame order. */
export function trajectoryPath(samples: TrajectoryPoint[]): string {
  if (samples.length === 0) return "";
  const parts = samples.map(
    (s, i) => `${i === 0 ? "M" : "L"} ${fixed(s.x)} ${fixed(s.y)}`,
  );
  return parts.join(" ");
}

export interface TrajectoryShape {
  id: number;
  d: string;
  start: TrajectoryPoint;
  end: TrajectoryPoint;
}

/** One drawable path per control point, plus its endpoints for markers. */
export function controlFieldShapes(field: ControlFieldDoc): TrajectoryShape[] {
  const shapes: TrajectoryShape[] = [];
  for (const point of field.points) {
    const first = point.trajectory[0];
    const last = point.trajectory[point.trajectory.length - 1];
    if (!first || !last) continue;
    shapes.push({
      id: point.id,
      d: trajectoryPath(point.trajectory),
      start: first,
      end: last,
    });
  }
  return shapes;
}
