import { test } from "node:test";
import assert from "node:assert/strict";

import {
  overlapsExisting,
  toUploadRecord,
  validateSegment,
} from "../src/annotate.js";

const base = { trajectoryId: "t1", annotatorId: "a1" };

test("valid segment passes", () => {
  assert.equal(validateSegment({ ...base, t0: 10, t1: 40,
    instruction: "pick up the axe" }), null);
});

test("150-tick selection violates the ten second rule", () => {
  const problem = validateSegment({ ...base, t0: 0, t1: 150,
    instruction: "do everything" });
  assert.match(problem ?? "", /150 ticks, max 100/);
});

test("empty instruction rejected", () => {
  assert.notEqual(validateSegment({ ...base, t0: 0, t1: 10,
    instruction: "   " }), null);
});

test("inverted range rejected", () => {
  assert.notEqual(validateSegment({ ...base, t0: 10, t1: 10,
    instruction: "x y" }), null);
});

test("overlap from the same annotator rejected, others allowed", () => {
  const existing = [{ ...base, t0: 0, t1: 20, instruction: "one" }];
  assert.ok(overlapsExisting({ ...base, t0: 10, t1: 30, instruction: "two" },
    existing));
  assert.ok(!overlapsExisting({ ...base, t0: 20, t1: 30, instruction: "two" },
    existing));
  assert.ok(!overlapsExisting(
    { ...base, annotatorId: "someone-else", t0: 10, t1: 30, instruction: "two" },
    existing));
});

test("upload record uses the server's field names", () => {
  const record = toUploadRecord({ ...base, t0: 3, t1: 9,
    instruction: "  lift the cube " });
  assert.deepEqual(record, {
    trajectory_id: "t1",
    trajectory_path: "",
    t0: 3,
    t1: 9,
    instruction: "lift the cube",
    source: "posthoc",
    annotator_id: "a1",
  });
});
