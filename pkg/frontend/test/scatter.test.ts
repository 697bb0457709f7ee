import { describe, expect, it } from "vitest";
import {
  fitToCanvas,
  groupColor,
  mergedGroup,
  parseScatterCsv,
} from "../src/scatter.js";

const CSV =
  "image_id,x,y,cluster\n" +
  "img_0000,-1.5,2.0,0\n" +
  "img_0001,0.0,0.0,1\n" +
  "img_0002,3.5,-2.0,1\n";

describe("parseScatterCsv", () => {
  it("reads the four-column form", () => {
    const points = parseScatterCsv(CSV);
    expect(points).toHaveLength(3);
    expect(points[0]).toEqual({ imageId: "img_0000", x: -1.5, y: 2.0, cluster: 0 });
  });

  it("reads the bare three-column form with null clusters", () => {
    const points = parseScatterCsv("image_id,x,y\na,1,2\n");
    expect(points[0]?.cluster).toBeNull();
  });

  it("tolerates a trailing newline and blank lines", () => {
    expect(parseScatterCsv("image_id,x,y\n\na,1,2\n\n")).toHaveLength(1);
  });

  it("rejects an alien header", () => {
    expect(() => parseScatterCsv("id,a,b\n")).toThrow("unexpected scatter header");
  });

  it("rejects rows with the wrong shape or bad numbers", () => {
    expect(() => parseScatterCsv("image_id,x,y\na,1\n")).toThrow("bad scatter row 2");
    expect(() => parseScatterCsv("image_id,x,y\na,one,2\n")).toThrow(
      "bad coordinates on scatter row 2",
    );
  });
});

describe("fitToCanvas", () => {
  it("maps data extremes onto the padded frame with y flipped", () => {
    const points = parseScatterCsv(CSV);
    const pixels = fitToCanvas(points, 300, 200, 10);
    // leftmost x -> left pad edge; max y -> top pad edge
    expect(pixels[0]?.px).toBeCloseTo(10, 10);
    expect(pixels[0]?.py).toBeCloseTo(10, 10);
    // rightmost x, lowest y -> far corner
    expect(pixels[2]?.px).toBeCloseTo(290, 10);
    expect(pixels[2]?.py).toBeCloseTo(190, 10);
  });

  it("centers a degenerate axis instead of dividing by zero", () => {
    const points = parseScatterCsv("image_id,x,y\na,5,1\nb,5,2\n");
    const pixels = fitToCanvas(points, 100, 100, 10);
    expect(pixels[0]?.px).toBe(50);
    expect(pixels[1]?.px).toBe(50);
    expect(Number.isFinite(pixels[0]?.py)).toBe(true);
  });

  it("returns nothing for no points", () => {
    expect(fitToCanvas([], 100, 100)).toEqual([]);
  });
});

describe("mergedGroup and colors", () => {
  it("routes a cluster through the merge map", () => {
    const point = { imageId: "a", x: 0, y: 0, cluster: 7 };
    expect(mergedGroup(point, { "7": 2 })).toBe(2);
    expect(mergedGroup(point, {})).toBe(7);
    expect(mergedGroup({ ...point, cluster: null }, { "7": 2 })).toBeNull();
  });

  it("gives distinct stable colors per group and grey for null", () => {
    expect(groupColor(0)).toBe(groupColor(0));
    expect(groupColor(0)).not.toBe(groupColor(1));
    expect(groupColor(null)).toBe("hsl(0, 0%, 55%)");
  });
});
