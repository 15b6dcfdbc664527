import { test } from "node:test";
import assert from "node:assert/strict";

import { InputQuantizer, PIXELS_PER_BUCKET } from "../src/input.js";

test("holding W yields W in every sampled tick", () => {
  const q = new InputQuantizer();
  q.keyDown("KeyW");
  const actions = [];
  for (let tick = 0; tick < 10; tick++) actions.push(q.sample(tick));
  assert.equal(actions.length, 10);
  for (const action of actions) {
    assert.ok(action.keys.has("W"));
  }
  q.keyUp("KeyW");
  assert.ok(!q.sample(10).keys.has("W"));
});

test("fast pointer motion clamps at bucket 3", () => {
  const q = new InputQuantizer();
  q.pointerMove(500, -900);
  const action = q.sample(0);
  assert.equal(action.mouseDx, 3);
  assert.equal(action.mouseDy, -3);
  // accumulator resets after sampling
  assert.equal(q.sample(1).mouseDx, 0);
});

test("small motions accumulate between ticks", () => {
  const q = new InputQuantizer();
  q.pointerMove(PIXELS_PER_BUCKET / 2, 0);
  q.pointerMove(PIXELS_PER_BUCKET / 2, 0);
  assert.equal(q.sample(0).mouseDx, 1);
});

test("unknown keys are ignored", () => {
  const q = new InputQuantizer();
  assert.equal(q.keyDown("KeyZ"), false);
  assert.equal(q.sample(0).keys.size, 0);
});

test("blur clears held state so input never buffers across reconnect", () => {
  const q = new InputQuantizer();
  q.keyDown("KeyW");
  q.buttons(true, false);
  q.pointerMove(100, 100);
  q.clearOnBlur();
  const action = q.sample(5);
  assert.equal(action.keys.size, 0);
  assert.equal(action.leftButton, false);
  assert.equal(action.mouseDx, 0);
});
