import { test } from "node:test";
import assert from "node:assert/strict";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

import {
  ActionEvent,
  Message,
  bytesToHex,
  decode,
  encode,
  hexToBytes,
  keyMask,
  keysFromMask,
  splitStream,
} from "../src/protocol.js";

// the same golden bytes the server validates against
const goldenPath = join(dirname(fileURLToPath(import.meta.url)),
  "..", "..", "tests", "golden", "wire_messages.json");
const golden = JSON.parse(readFileSync(goldenPath, "utf-8")) as
  Record<string, string>;

test("hello golden bytes match the server codec", () => {
  const bytes = encode({ kind: "hello", role: "player", clientName: "golden" });
  assert.equal(bytesToHex(bytes), golden.hello);
  const back = decode(hexToBytes(golden.hello));
  assert.deepEqual(back, { kind: "hello", role: "player", clientName: "golden" });
});

test("action golden bytes match", () => {
  const action: ActionEvent = {
    tick: 41, keys: new Set(["W", "E"]), mouseDx: -2, mouseDy: 1,
    leftButton: true, rightButton: false,
  };
  assert.equal(bytesToHex(encode({ kind: "action", action })), golden.action);
});

test("instruction golden bytes match", () => {
  const bytes = encode({ kind: "instruction", text: "go to the table",
                         source: "live" });
  assert.equal(bytesToHex(bytes), golden.instruction);
});

test("session config golden bytes match", () => {
  const bytes = encode({
    kind: "session_config", tickHz: 10, obsDelayMs: 0, actionDelayMs: 0,
    jitterMs: 0, offsetK: 2, record: true, worldId: "playroom",
    taskId: "playroom:room_a:goto-table", seed: 7n, budgetTicks: 100,
  });
  assert.equal(bytesToHex(bytes), golden.config);
});

test("every variant round-trips", () => {
  const cells = new Uint8Array(512);
  for (let i = 0; i < 256; i++) {
    cells[2 * i] = i % 64;
    cells[2 * i + 1] = i % 16;
  }
  const samples: Message[] = [
    { kind: "hello", role: "judge", clientName: "utf-8 roundtrip: üé ♞" },
    { kind: "session_config", tickHz: 50, obsDelayMs: 123, actionDelayMs: 456,
      jitterMs: 7, offsetK: 3, record: false, worldId: "harvest",
      taskId: "harvest:grove_a:collect-wood", seed: 0xdeadbeefcafef00dn,
      budgetTicks: 999 },
    { kind: "observation", observation: {
        tick: 17,
        frame: { width: 16, height: 16, cells, overlayText: ["MENU", "x"] },
        textEvents: [[16, "Wood +1"], [17, "Crafted Plank"]],
      } },
    { kind: "action", action: { tick: 9, keys: new Set(["SPACE", "ESC"]),
        mouseDx: 3, mouseDy: -3, leftButton: false, rightButton: true } },
    { kind: "instruction", text: "chop the carrot", source: "setter" },
    { kind: "reset", seed: 42n, taskId: "" },
    { kind: "load_state", blob: new Uint8Array([1, 2, 3, 255]) },
    { kind: "text_event", tick: 88, text: "Scanned Tree" },
    { kind: "interrupt", text: "turn left" },
    { kind: "end_episode", reason: "completed", status: "success", ticksUsed: 31 },
    { kind: "judge_request", episodeId: "ep1", rubric: "be strict",
      trajectoryRef: "abc" },
  ];
  for (const msg of samples) {
    assert.deepEqual(decode(encode(msg)), msg);
  }
});

test("split stream decodes concatenated frames", () => {
  const a = encode({ kind: "interrupt", text: "stop" });
  const b = encode({ kind: "text_event", tick: 1, text: "Door opened" });
  const joined = new Uint8Array(a.length + b.length);
  joined.set(a);
  joined.set(b, a.length);
  const msgs = splitStream(joined);
  assert.equal(msgs.length, 2);
  assert.equal(msgs[0].kind, "interrupt");
  assert.equal(msgs[1].kind, "text_event");
});

test("truncated and corrupt buffers are rejected", () => {
  const bytes = encode({ kind: "hello", role: "player", clientName: "x" });
  assert.throws(() => decode(bytes.subarray(0, bytes.length - 1)));
  const bad = new Uint8Array(bytes);
  bad[4] = 0x5a;
  assert.throws(() => decode(bad));
});

test("key mask round trip covers all 16 keys", () => {
  const keys = new Set(["W", "A", "S", "D", "SPACE", "E", "Q", "R", "F", "C",
    "1", "2", "3", "4", "SHIFT", "ESC"]);
  assert.equal(keyMask(keys), 0xffff);
  assert.deepEqual(keysFromMask(0xffff), keys);
});
