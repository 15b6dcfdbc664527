// Binary session protocol codec. Mirrors the server codec byte for byte:
// u32 LE body length, magic "TW", u8 version, u8 variant tag, payload.
// One websocket binary frame carries exactly one encoded message.

export const MAGIC = new Uint8Array([0x54, 0x57]); // "TW"
export const VERSION = 1;

export const KEY_ORDER = [
  "W", "A", "S", "D", "SPACE", "E", "Q", "R",
  "F", "C", "1", "2", "3", "4", "SHIFT", "ESC",
] as const;

export const ROLES = ["player", "agent", "setter", "solver", "instructor",
  "annotator", "judge", "scripted", "observer"] as const;
export const INSTRUCTION_SOURCES = ["live", "posthoc", "setter", "scripted"] as const;
export const END_REASONS = ["completed", "disconnect", "budget_exhausted",
  "error", "shutdown"] as const;
export const END_STATUSES = ["ongoing", "success", "failure", "timeout",
  "distractor_failure"] as const;

export interface ActionEvent {
  tick: number;
  keys: Set<string>;
  mouseDx: number;
  mouseDy: number;
  leftButton: boolean;
  rightButton: boolean;
}

export interface Frame {
  width: number;
  height: number;
  cells: Uint8Array; // interleaved (symbol, color), row-major
  overlayText: string[];
}

export interface Observation {
  tick: number;
  frame: Frame;
  textEvents: Array<[number, string]>;
}

export type Message =
  | { kind: "hello"; role: string; clientName: string }
  | { kind: "session_config"; tickHz: number; obsDelayMs: number;
      actionDelayMs: number; jitterMs: number; offsetK: number; record: boolean;
      worldId: string; taskId: string; seed: bigint; budgetTicks: number }
  | { kind: "observation"; observation: Observation }
  | { kind: "action"; action: ActionEvent }
  | { kind: "instruction"; text: string; source: string }
  | { kind: "reset"; seed: bigint; taskId: string }
  | { kind: "load_state"; blob: Uint8Array }
  | { kind: "text_event"; tick: number; text: string }
  | { kind: "interrupt"; text: string }
  | { kind: "end_episode"; reason: string; status: string; ticksUsed: number }
  | { kind: "judge_request"; episodeId: string; rubric: string; trajectoryRef: string };

const TAGS: Record<Message["kind"], number> = {
  hello: 1, session_config: 2, observation: 3, action: 4, instruction: 5,
  reset: 6, load_state: 7, text_event: 8, interrupt: 9, end_episode: 10,
  judge_request: 11,
};

export class DecodeError extends Error {}

class Writer {
  private parts: number[] = [];

  u8(v: number) { this.parts.push(v & 0xff); }
  u16(v: number) { this.parts.push(v & 0xff, (v >> 8) & 0xff); }
  u32(v: number) {
    this.parts.push(v & 0xff, (v >>> 8) & 0xff, (v >>> 16) & 0xff, (v >>> 24) & 0xff);
  }
  u64(v: bigint) {
    let x = BigInt.asUintN(64, v);
    for (let i = 0; i < 8; i++) {
      this.parts.push(Number(x & 0xffn));
      x >>= 8n;
    }
  }
  i8(v: number) { this.parts.push((v << 24 >> 24) & 0xff); }
  raw(bytes: Uint8Array) { for (const b of bytes) this.parts.push(b); }
  str(s: string) {
    const data = new TextEncoder().encode(s);
    this.u16(data.length);
    this.raw(data);
  }
  blob(b: Uint8Array) {
    this.u32(b.length);
    this.raw(b);
  }
  bytes(): Uint8Array { return new Uint8Array(this.parts); }
}

class Reader {
  private pos = 0;
  constructor(private data: Uint8Array) {}

  private take(n: number): Uint8Array {
    if (this.pos + n > this.data.length) {
      throw new DecodeError(`truncated: need ${n} bytes at ${this.pos}`);
    }
    const out = this.data.subarray(this.pos, this.pos + n);
    this.pos += n;
    return out;
  }
  u8(): number { return this.take(1)[0]; }
  u16(): number { const b = this.take(2); return b[0] | (b[1] << 8); }
  u32(): number {
    const b = this.take(4);
    return (b[0] | (b[1] << 8) | (b[2] << 16) | (b[3] << 24)) >>> 0;
  }
  u64(): bigint {
    let out = 0n;
    const b = this.take(8);
    for (let i = 7; i >= 0; i--) out = (out << 8n) | BigInt(b[i]);
    return out;
  }
  i8(): number { return this.take(1)[0] << 24 >> 24; }
  str(): string { return new TextDecoder().decode(this.take(this.u16())); }
  blob(): Uint8Array { return new Uint8Array(this.take(this.u32())); }
  remaining(): number { return this.data.length - this.pos; }
}

export function keyMask(keys: Set<string>): number {
  let mask = 0;
  KEY_ORDER.forEach((key, i) => { if (keys.has(key)) mask |= 1 << i; });
  return mask;
}

export function keysFromMask(mask: number): Set<string> {
  const keys = new Set<string>();
  KEY_ORDER.forEach((key, i) => { if ((mask >> i) & 1) keys.add(key); });
  return keys;
}

function writeAction(w: Writer, a: ActionEvent) {
  w.u32(a.tick);
  w.u16(keyMask(a.keys));
  w.i8(a.mouseDx);
  w.i8(a.mouseDy);
  w.u8((a.leftButton ? 1 : 0) | (a.rightButton ? 2 : 0));
}

function readAction(r: Reader): ActionEvent {
  const tick = r.u32();
  const keys = keysFromMask(r.u16());
  const mouseDx = r.i8();
  const mouseDy = r.i8();
  const buttons = r.u8();
  return {
    tick, keys, mouseDx, mouseDy,
    leftButton: (buttons & 1) !== 0,
    rightButton: (buttons & 2) !== 0,
  };
}

export function encode(msg: Message): Uint8Array {
  const w = new Writer();
  w.raw(MAGIC);
  w.u8(VERSION);
  w.u8(TAGS[msg.kind]);
  switch (msg.kind) {
    case "hello":
      w.u8(ROLES.indexOf(msg.role as typeof ROLES[number]));
      w.str(msg.clientName);
      break;
    case "session_config":
      w.u16(msg.tickHz);
      w.u32(msg.obsDelayMs);
      w.u32(msg.actionDelayMs);
      w.u32(msg.jitterMs);
      w.u8(msg.offsetK);
      w.u8(msg.record ? 1 : 0);
      w.str(msg.worldId);
      w.str(msg.taskId);
      w.u64(msg.seed);
      w.u32(msg.budgetTicks);
      break;
    case "observation": {
      const obs = msg.observation;
      w.u32(obs.tick);
      w.u8(obs.frame.width);
      w.u8(obs.frame.height);
      w.blob(obs.frame.cells);
      w.u8(obs.frame.overlayText.length);
      for (const line of obs.frame.overlayText) w.str(line);
      w.u16(obs.textEvents.length);
      for (const [tick, text] of obs.textEvents) {
        w.u32(tick);
        w.str(text);
      }
      break;
    }
    case "action":
      writeAction(w, msg.action);
      break;
    case "instruction":
      w.str(msg.text);
      w.u8(INSTRUCTION_SOURCES.indexOf(msg.source as typeof INSTRUCTION_SOURCES[number]));
      break;
    case "reset":
      w.u64(msg.seed);
      w.str(msg.taskId);
      break;
    case "load_state":
      w.blob(msg.blob);
      break;
    case "text_event":
      w.u32(msg.tick);
      w.str(msg.text);
      break;
    case "interrupt":
      w.str(msg.text);
      break;
    case "end_episode":
      w.u8(END_REASONS.indexOf(msg.reason as typeof END_REASONS[number]));
      w.u8(END_STATUSES.indexOf(msg.status as typeof END_STATUSES[number]));
      w.u32(msg.ticksUsed);
      break;
    case "judge_request":
      w.str(msg.episodeId);
      w.str(msg.rubric);
      w.str(msg.trajectoryRef);
      break;
  }
  const body = w.bytes();
  const framed = new Writer();
  framed.u32(body.length);
  framed.raw(body);
  return framed.bytes();
}

export function decode(data: Uint8Array): Message {
  const [msg, used] = decodePrefix(data);
  if (used !== data.length) throw new DecodeError("trailing bytes after message");
  return msg;
}

export function decodePrefix(data: Uint8Array): [Message, number] {
  if (data.length < 4) throw new DecodeError("shorter than length prefix");
  const length = (data[0] | (data[1] << 8) | (data[2] << 16) | (data[3] << 24)) >>> 0;
  if (data.length < 4 + length) throw new DecodeError("truncated body");
  const body = data.subarray(4, 4 + length);
  if (body.length < 4) throw new DecodeError("body shorter than header");
  if (body[0] !== MAGIC[0] || body[1] !== MAGIC[1]) throw new DecodeError("bad magic");
  if (body[2] !== VERSION) throw new DecodeError(`unsupported version ${body[2]}`);
  const tag = body[3];
  const r = new Reader(body.subarray(4));
  let msg: Message;
  switch (tag) {
    case 1:
      msg = { kind: "hello", role: ROLES[r.u8()], clientName: r.str() };
      break;
    case 2:
      msg = {
        kind: "session_config", tickHz: r.u16(), obsDelayMs: r.u32(),
        actionDelayMs: r.u32(), jitterMs: r.u32(), offsetK: r.u8(),
        record: r.u8() !== 0, worldId: r.str(), taskId: r.str(),
        seed: r.u64(), budgetTicks: r.u32(),
      };
      break;
    case 3: {
      const tick = r.u32();
      const width = r.u8();
      const height = r.u8();
      const cells = r.blob();
      const overlayCount = r.u8();
      const overlayText: string[] = [];
      for (let i = 0; i < overlayCount; i++) overlayText.push(r.str());
      const eventCount = r.u16();
      const textEvents: Array<[number, string]> = [];
      for (let i = 0; i < eventCount; i++) textEvents.push([r.u32(), r.str()]);
      msg = {
        kind: "observation",
        observation: { tick, frame: { width, height, cells, overlayText }, textEvents },
      };
      break;
    }
    case 4:
      msg = { kind: "action", action: readAction(r) };
      break;
    case 5:
      msg = { kind: "instruction", text: r.str(), source: INSTRUCTION_SOURCES[r.u8()] };
      break;
    case 6:
      msg = { kind: "reset", seed: r.u64(), taskId: r.str() };
      break;
    case 7:
      msg = { kind: "load_state", blob: r.blob() };
      break;
    case 8:
      msg = { kind: "text_event", tick: r.u32(), text: r.str() };
      break;
    case 9:
      msg = { kind: "interrupt", text: r.str() };
      break;
    case 10:
      msg = {
        kind: "end_episode", reason: END_REASONS[r.u8()],
        status: END_STATUSES[r.u8()], ticksUsed: r.u32(),
      };
      break;
    case 11:
      msg = { kind: "judge_request", episodeId: r.str(), rubric: r.str(),
              trajectoryRef: r.str() };
      break;
    default:
      throw new DecodeError(`unknown variant tag ${tag}`);
  }
  if (r.remaining() !== 0) throw new DecodeError("trailing bytes inside body");
  return [msg, 4 + length];
}

export function splitStream(data: Uint8Array): Message[] {
  const out: Message[] = [];
  let pos = 0;
  while (pos < data.length) {
    const [msg, used] = decodePrefix(data.subarray(pos));
    out.push(msg);
    pos += used;
  }
  return out;
}

export function hexToBytes(hex: string): Uint8Array {
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.substring(2 * i, 2 * i + 2), 16);
  }
  return out;
}

export function bytesToHex(data: Uint8Array): string {
  return Array.from(data, (b) => b.toString(16).padStart(2, "0")).join("");
}
