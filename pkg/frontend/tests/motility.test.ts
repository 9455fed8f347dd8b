import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { motilityRows, progressiveLabel } from "../src/motility.js";
import type { TrackResponse } from "../src/types.js";

const FIXTURES = join(__dirname, "fixtures");
const trackResponse: TrackResponse = JSON.parse(
  readFileSync(join(FIXTURES, "track_response.json"), "utf-8"),
);
const cliCsv = readFileSync(join(FIXTURES, "cli_motility.csv"), "utf-8");

function parseCsv(text: string) {
  const [header, ...lines] = text.trim().split("\n");
  const keys = header.split(",");
  return lines.map((line) => {
    const values = line.split(",");
    return Object.fromEntries(keys.map((k, i) => [k, values[i]]));
  });
}

describe("motility table parity with the CLI", () => {
  it("table rows equal the CLI CSV for identical inputs", () => {
    const rows = motilityRows(trackResponse);
    const cliRows = parseCsv(cliCsv);
    expect(rows.length).toBe(cliRows.length);
    const cliById = new Map(cliRows.map((r) => [Number(r.object_id), r]));
    for (const row of rows) {
      const cli = cliById.get(row.objectId);
      expect(cli).toBeDefined();
      expect(Number(row.vsl)).toBeCloseTo(Number(cli!.vsl), 2);
      expect(Number(row.vcl)).toBeCloseTo(Number(cli!.vcl), 2);
      expect(Number(row.vap)).toBeCloseTo(Number(cli!.vap), 2);
      expect(row.motile).toBe(cli!.motile === "1");
      expect(row.frames).toBe(Number(cli!.frames));
    }
  });

  it("progressive ratio is rendered from the service value", () => {
    const pr = trackResponse.motility.progressive_ratio!;
    expect(progressiveLabel(trackResponse)).toBe(`${(pr * 100).toFixed(1)}%`);
  });

  it("handles an empty report", () => {
    const empty: TrackResponse = {
      ...trackResponse,
      motility: { ...trackResponse.motility, entries: [], progressive_ratio: null },
    };
    expect(motilityRows(empty)).toEqual([]);
    expect(progressiveLabel(empty)).toBe("n/a");
  });
});
