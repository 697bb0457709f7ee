// Parsing and geometry for the 2-d map. Drawing happens on a plain
// canvas in main.ts; everything here is pure so it can be tested.

export interface ScatterPoint {
  imageId: string;
  x: number;
  y: number;
  cluster: number | null;
}

export function parseScatterCsv(text: string): ScatterPoint[] {
  const lines = text.split("\n").filter((line) => line.length > 0);
  const header = lines[0];
  if (header !== "image_id,x,y" && header !== "image_id,x,y,cluster") {
    throw new Error(`unexpected scatter header: ${header ?? "<empty file>"}`);
  }
  const hasCluster = header === "image_id,x,y,cluster";
  return lines.slice(1).map((line, index) => {
    const parts = line.split(",");
    if (parts.length !== (hasCluster ? 4 : 3)) {
      throw new Error(`bad scatter row ${index + 2}: ${line}`);
    }
    const x = Number(parts[1]);
    const y = Number(parts[2]);
    if (!Number.isFinite(x) || !Number.isFinite(y)) {
      throw new Error(`bad coordinates on scatter row ${index + 2}: ${line}`);
    }
    return {
      imageId: parts[0] as string,
      x,
      y,
      cluster: hasCluster ? Number(parts[3]) : null,
    };
  });
}

/** The id a point is colored by: its merged group when a merge is
 * set, otherwise its raw cluster. */
export function mergedGroup(
  point: ScatterPoint,
  mergeMap: Record<string, number>,
): number | null {
  if (point.cluster === null) return null;
  const merged = mergeMap[String(point.cluster)];
  return merged !== undefined ? merged : point.cluster;
}

export interface PixelPoint {
  px: number;
  py: number;
}

/** Map data coordinates into a padded canvas box, y up. Degenerate
 * extents (all points on a line) collapse to the center. */
export function fitToCanvas(
  points: ScatterPoint[],
  width: number,
  height: number,
  pad = 12,
): PixelPoint[] {
  if (points.length === 0) return [];
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x);
    maxX = Math.max(maxX, p.x);
    minY = Math.min(minY, p.y);
    maxY = Math.max(maxY, p.y);
  }
  const spanX = maxX - minX;
  const spanY = maxY - minY;
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  return points.map((p) => ({
    px: spanX > 0 ? pad + ((p.x - minX) / spanX) * innerW : width / 2,
    py: spanY > 0 ? pad + ((maxY - p.y) / spanY) * innerH : height / 2,
  }));
}

/** Stable, well-spread palette: golden-angle hue walk. */
export function groupColor(group: number | null): string {
  if (group === null) return "hsl(0, 0%, 55%)";
  const hue = (group * 137.508) % 360;
  return `hsl(${hue.toFixed(1)}, 65%, 48%)`;
}
