// Keyboard/pointer capture quantized to one ActionEvent per tick.
// Keys are level-sampled (held keys appear in every tick's event), pointer
// motion accumulates between ticks and is clamped to the -3..3 buckets.

import { ActionEvent } from "./protocol.js";

const KEY_MAP: Record<string, string> = {
  KeyW: "W", KeyA: "A", KeyS: "S", KeyD: "D",
  Space: "SPACE", KeyE: "E", KeyQ: "Q", KeyR: "R",
  KeyF: "F", KeyC: "C",
  Digit1: "1", Digit2: "2", Digit3: "3", Digit4: "4",
  ShiftLeft: "SHIFT", ShiftRight: "SHIFT", Escape: "ESC",
};

export const PIXELS_PER_BUCKET = 12;

export class InputQuantizer {
  private held = new Set<string>();
  private accumDx = 0;
  private accumDy = 0;
  private left = false;
  private right = false;

  keyDown(code: string): boolean {
    const key = KEY_MAP[code];
    if (!key) return false;
    this.held.add(key);
    return true;
  }

  keyUp(code: string): void {
    const key = KEY_MAP[code];
    if (key) this.held.delete(key);
  }

  pointerMove(dxPixels: number, dyPixels: number): void {
    this.accumDx += dxPixels;
    this.accumDy += dyPixels;
  }

  buttons(left: boolean, right: boolean): void {
    this.left = left;
    this.right = right;
  }

  clearOnBlur(): void {
    // never carry input state across focus loss or reconnect
    this.held.clear();
    this.accumDx = 0;
    this.accumDy = 0;
    this.left = false;
    this.right = false;
  }

  sample(tick: number): ActionEvent {
    const clamp = (v: number) => Math.max(-3, Math.min(3, Math.round(v)));
    const action: ActionEvent = {
      tick,
      keys: new Set(this.held),
      mouseDx: clamp(this.accumDx / PIXELS_PER_BUCKET),
      mouseDy: clamp(this.accumDy / PIXELS_PER_BUCKET),
      leftButton: this.left,
      rightButton: this.right,
    };
    this.accumDx = 0;
    this.accumDy = 0;
    return action;
  }
}
