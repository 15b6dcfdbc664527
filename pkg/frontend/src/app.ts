// Browser client: live play, instructing a running agent, post-hoc
// annotation, and episode judging. The client renders observations and
// emits protocol messages; all rules stay on the server.

import {
  ActionEvent,
  Message,
  Observation,
  decode,
  encode,
  splitStream,
} from "./protocol.js";
import { InputQuantizer } from "./input.js";
import { CELL_PIXELS, drawFrame, drawOverlay } from "./render.js";
import {
  SegmentDraft,
  overlapsExisting,
  toUploadRecord,
  validateSegment,
} from "./annotate.js";

type View = "play" | "annotate" | "judge";

const app = document.getElementById("app")!;

interface SessionInfoResponse {
  session_id: string;
  ws_path: string;
  budget_ticks: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text = ""
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

// -- live play / instructing ---------------------------------------------------

class PlayView {
  private ws: WebSocket | null = null;
  private quantizer = new InputQuantizer();
  private sendTimer: number | null = null;
  private lastObs: Observation | null = null;
  private instructing = false;
  private instructionCount = 0;
  private ctx!: CanvasRenderingContext2D;
  private overlayEl!: HTMLElement;
  private eventsEl!: HTMLElement;
  private historyEl!: HTMLElement;
  private statusEl!: HTMLElement;

  mount(root: HTMLElement): void {
    const taskInput = el("input", { value: "playroom:room_a:goto-table",
                                    size: "40" });
    const seedInput = el("input", { value: "0", size: "6" });
    const modeSelect = el("select");
    for (const mode of ["play", "agent"]) {
      modeSelect.append(el("option", { value: mode }, mode));
    }
    const startBtn = el("button", {}, "start session");
    this.statusEl = el("span", { class: "status" }, "idle");

    const bar = el("div", { class: "bar" });
    bar.append("task ", taskInput, " seed ", seedInput, " mode ", modeSelect,
               startBtn, this.statusEl);

    const canvas = el("canvas", {
      width: String(16 * CELL_PIXELS), height: String(16 * CELL_PIXELS),
      tabindex: "0",
    });
    this.ctx = canvas.getContext("2d")!;
    this.overlayEl = el("pre", { class: "overlay" });
    this.eventsEl = el("pre", { class: "events" });

    const instructionInput = el("input", { size: "50",
      placeholder: "instruction for the agent" });
    const sendBtn = el("button", {}, "send");
    this.historyEl = el("ul", { class: "history" });
    const panel = el("div", { class: "panel" });
    panel.append(instructionInput, sendBtn, this.historyEl);

    root.append(bar, canvas, this.overlayEl, this.eventsEl, panel);

    startBtn.onclick = () => {
      this.start(taskInput.value.trim(), Number(seedInput.value),
                 modeSelect.value, instructionInput.value.trim());
      canvas.focus();
    };
    sendBtn.onclick = () => {
      const text = instructionInput.value.trim();
      if (!text) return; // empty instructions never reach the wire
      this.sendInstruction(text);
      instructionInput.value = "";
    };

    canvas.addEventListener("keydown", (e) => {
      if (this.quantizer.keyDown(e.code)) e.preventDefault();
    });
    canvas.addEventListener("keyup", (e) => this.quantizer.keyUp(e.code));
    canvas.addEventListener("mousemove", (e) =>
      this.quantizer.pointerMove(e.movementX, e.movementY));
    canvas.addEventListener("mousedown", (e) =>
      this.quantizer.buttons((e.buttons & 1) !== 0, (e.buttons & 2) !== 0));
    canvas.addEventListener("mouseup", (e) =>
      this.quantizer.buttons((e.buttons & 1) !== 0, (e.buttons & 2) !== 0));
    canvas.addEventListener("contextmenu", (e) => e.preventDefault());
    canvas.addEventListener("blur", () => this.quantizer.clearOnBlur());
  }

  private async start(taskId: string, seed: number, mode: string,
                      instruction: string): Promise<void> {
    this.stop();
    const response = await fetch("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ task_id: taskId, seed, mode, instruction,
                             record: true }),
    });
    if (!response.ok) {
      this.statusEl.textContent = `error: ${await response.text()}`;
      return;
    }
    const info = (await response.json()) as SessionInfoResponse;
    const role = mode === "agent" ? "instructor" : "player";
    const scheme = location.protocol === "https:" ? "wss" : "ws";
    this.ws = new WebSocket(
      `${scheme}://${location.host}${info.ws_path}?role=${role}`);
    this.ws.binaryType = "arraybuffer";
    this.instructing = mode === "agent";
    this.instructionCount = 0;
    this.ws.onopen = () => {
      this.ws!.send(encode({ kind: "hello", role, clientName: "browser" }));
      this.statusEl.textContent = `session ${info.session_id}`;
      if (!this.instructing) this.startSending();
    };
    this.ws.onmessage = (event) => {
      this.onMessage(decode(new Uint8Array(event.data as ArrayBuffer)));
    };
    this.ws.onclose = () => {
      this.stop();
      this.statusEl.textContent = "disconnected (start a new session to reconnect)";
    };
  }

  private startSending(): void {
    // actions go out on a fixed 10 Hz timer, one quantized event per tick
    this.sendTimer = window.setInterval(() => {
      if (!this.ws || this.ws.readyState !== WebSocket.OPEN || !this.lastObs) return;
      const action: ActionEvent = this.quantizer.sample(this.lastObs.tick);
      this.ws.send(encode({ kind: "action", action }));
    }, 100);
  }

  private sendInstruction(text: string): void {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN) return;
    const message: Message = this.instructionCount === 0
      ? { kind: "instruction", text, source: "live" }
      : { kind: "interrupt", text };
    this.ws.send(encode(message));
    this.instructionCount += 1;
    const item = el("li", {},
      `${this.instructionCount === 1 ? "instruction" : "interrupt"}: ${text}`);
    this.historyEl.prepend(item);
  }

  private onMessage(msg: Message): void {
    if (msg.kind === "observation") {
      this.lastObs = msg.observation;
      drawFrame(this.ctx, msg.observation.frame);
      drawOverlay(this.overlayEl, msg.observation.frame.overlayText);
      for (const [tick, text] of msg.observation.textEvents) {
        this.eventsEl.textContent =
          `[${tick}] ${text}\n` + this.eventsEl.textContent!.slice(0, 400);
      }
    } else if (msg.kind === "end_episode") {
      this.statusEl.textContent =
        `ended: ${msg.reason} (${msg.status}, ${msg.ticksUsed} ticks)`;
      this.stop();
    }
  }

  private stop(): void {
    if (this.sendTimer !== null) {
      clearInterval(this.sendTimer);
      this.sendTimer = null;
    }
    this.quantizer.clearOnBlur();
    if (this.ws && this.ws.readyState === WebSocket.OPEN) this.ws.close();
    this.ws = null;
  }
}

// -- shared replay scrubber ------------------------------------------------------

class ReplayScrubber {
  frames: Observation[] = [];
  private ctx: CanvasRenderingContext2D;
  readonly slider: HTMLInputElement;
  readonly label: HTMLElement;

  constructor(root: HTMLElement) {
    const canvas = el("canvas", {
      width: String(16 * CELL_PIXELS), height: String(16 * CELL_PIXELS),
    });
    this.ctx = canvas.getContext("2d")!;
    this.slider = el("input", { type: "range", min: "0", max: "0", value: "0" });
    this.label = el("span", {}, "tick 0");
    this.slider.oninput = () => this.show(Number(this.slider.value));
    root.append(canvas, el("div", {}), this.slider, this.label);
  }

  async load(trajectoryId: string): Promise<void> {
    const blob = new Uint8Array(
      await (await fetch(`/trajectories/${trajectoryId}/messages`)).arrayBuffer());
    this.frames = splitStream(blob)
      .filter((m): m is Extract<Message, { kind: "observation" }> =>
        m.kind === "observation")
      .map((m) => m.observation);
    this.slider.max = String(Math.max(0, this.frames.length - 1));
    this.show(0);
  }

  show(index: number): void {
    const obs = this.frames[index];
    if (!obs) return;
    drawFrame(this.ctx, obs.frame);
    this.label.textContent = `tick ${obs.tick}`;
  }

  currentTick(): number {
    const obs = this.frames[Number(this.slider.value)];
    return obs ? obs.tick : 0;
  }
}

// -- annotation ---------------------------------------------------------------

class AnnotateView {
  private drafts: SegmentDraft[] = [];

  async mount(root: HTMLElement): Promise<void> {
    const picker = el("select");
    const info = el("span", {}, "loading trajectories...");
    root.append(picker, info, el("div"));
    const scrubber = new ReplayScrubber(root);

    const t0Btn = el("button", {}, "mark start");
    const t1Btn = el("button", {}, "mark end");
    const textInput = el("input", { size: "40", placeholder: "instruction" });
    const nameInput = el("input", { size: "12", placeholder: "annotator id" });
    const addBtn = el("button", {}, "add segment");
    const uploadBtn = el("button", {}, "upload");
    const listEl = el("ul");
    const status = el("div", { class: "status" });
    root.append(el("div"), t0Btn, t1Btn, textInput, nameInput, addBtn,
                uploadBtn, listEl, status);

    const trajectories = await (await fetch("/trajectories")).json() as
      Array<{ trajectory_id: string; task_id: string; ticks: number }>;
    picker.innerHTML = "";
    for (const t of trajectories) {
      picker.append(el("option", { value: t.trajectory_id },
                       `${t.trajectory_id.slice(0, 10)} ${t.task_id} (${t.ticks})`));
    }
    info.textContent = `${trajectories.length} recordings`;
    picker.onchange = () => scrubber.load(picker.value);
    if (trajectories.length) await scrubber.load(picker.value);

    let markStart = 0;
    t0Btn.onclick = () => { markStart = scrubber.currentTick(); };
    t1Btn.onclick = () => { /* end is read at add time */ };
    addBtn.onclick = () => {
      const draft: SegmentDraft = {
        trajectoryId: picker.value,
        t0: markStart,
        t1: scrubber.currentTick(),
        instruction: textInput.value,
        annotatorId: nameInput.value || "anonymous",
      };
      const problem = validateSegment(draft);
      if (problem) {
        status.textContent = `rejected: ${problem}`;
        return;
      }
      if (overlapsExisting(draft, this.drafts)) {
        status.textContent = "rejected: overlaps one of your segments";
        return;
      }
      this.drafts.push(draft);
      listEl.append(el("li", {},
        `[${draft.t0}, ${draft.t1}) ${draft.instruction}`));
      status.textContent = `${this.drafts.length} segment(s) staged`;
    };
    uploadBtn.onclick = async () => {
      const response = await fetch("/annotations", {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(this.drafts.map(toUploadRecord)),
      });
      status.textContent = response.ok
        ? `uploaded ${this.drafts.length} segment(s)`
        : `upload failed: ${await response.text()}`;
      if (response.ok) this.drafts = [];
    };
  }
}

// -- judging --------------------------------------------------------------------

class JudgeView {
  async mount(root: HTMLElement): Promise<void> {
    const queue = await (await fetch("/judge/queue")).json() as Array<{
      episode_id: string; trajectory_id: string; rubric: string;
      instruction: string; ratings: number;
    }>;
    const picker = el("select");
    for (const item of queue) {
      picker.append(el("option", { value: item.episode_id },
        `${item.episode_id} (${item.ratings} ratings)`));
    }
    const judgeInput = el("input", { size: "12", placeholder: "judge id" });
    root.append(picker, judgeInput, el("div"));
    const scrubber = new ReplayScrubber(root);
    const rubricEl = el("p", { class: "rubric" });
    const instructionEl = el("p", { class: "instruction" });
    const warnEl = el("p", { class: "warn" });
    const successBtn = el("button", {}, "success");
    const failureBtn = el("button", {}, "failure");
    const status = el("div", { class: "status" });
    root.append(instructionEl, rubricEl, warnEl, successBtn, failureBtn, status);

    const submitted = new Set<string>();

    const select = async () => {
      const item = queue.find((q) => q.episode_id === picker.value);
      if (!item) return;
      instructionEl.textContent = `instruction: ${item.instruction}`;
      rubricEl.textContent = item.rubric;
      await scrubber.load(item.trajectory_id);
      const check = await (await fetch(
        `/trajectories/${item.trajectory_id}/replay-check`)).json();
      warnEl.textContent = check.ok
        ? ""
        : `warning: recording diverges from replay at tick ${check.first_divergent_tick}`;
    };
    picker.onchange = select;
    if (queue.length) await select();

    const submit = async (rating: "success" | "failure") => {
      const key = `${picker.value}:${judgeInput.value}`;
      if (submitted.has(key)) {
        status.textContent = "already submitted for this episode";
        return;
      }
      const response = await fetch("/judgments", {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({
          episode_id: picker.value,
          judge_id: judgeInput.value || "anonymous",
          rating,
        }),
      });
      if (response.status === 409) {
        submitted.add(key);
        status.textContent = "this judge already rated this episode";
        return;
      }
      if (response.ok) {
        submitted.add(key);
        const doc = await response.json();
        status.textContent = `recorded ${rating} (${doc.ratings_so_far} ratings)`;
      } else {
        status.textContent = `error: ${await response.text()}`;
      }
    };
    successBtn.onclick = () => submit("success");
    failureBtn.onclick = () => submit("failure");
  }
}

// -- shell -----------------------------------------------------------------------

function navigate(view: View): void {
  app.innerHTML = "";
  const nav = el("nav");
  for (const target of ["play", "annotate", "judge"] as View[]) {
    const btn = el("button", {}, target);
    if (target === view) btn.setAttribute("class", "active");
    btn.onclick = () => navigate(target);
    nav.append(btn);
  }
  const body = el("div", { class: "view" });
  app.append(nav, body);
  if (view === "play") new PlayView().mount(body);
  else if (view === "annotate") void new AnnotateView().mount(body);
  else void new JudgeView().mount(body);
}

navigate("play");
