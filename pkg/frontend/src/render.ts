// Canvas renderer: 16x16 symbolic frames as a colored glyph grid.
// The client draws observations and nothing else; no game rules live here.

import { Frame } from "./protocol.js";

export const PALETTE = [
  "#9aa0a6", // 0 none/gray
  "#e45756", // 1 red
  "#54a24b", // 2 green
  "#4c78a8", // 3 blue
  "#eeca3b", // 4 yellow
  "#b279a2", // 5 purple
  "#f58518", // 6 orange
  "#f4f4f4", // 7 white
  "#5f6368", // 8 dark gray
  "#9d755d", // 9 brown
  "#72b7b2", // 10 cyan
  "#ff9da6", // 11 pink
  "#b6e880", // 12 lime
  "#1b9e77", // 13 teal
  "#34495e", // 14 navy
  "#d4af37", // 15 gold
];

// glyph per symbol id; index matches the world renderer's symbol table
export const GLYPHS = [
  " ", ".", "#", "@", "^", "+", "/", "T",
  "c", "o", "k", "r", "x", "=", "t", "n",
  "w", "%", "B", "s", "S", "M", "I", "H",
  "P", "-", "?", "?", "?", "?", "?", "?",
  "?", "?", "?", "?", "?", "?", "?", "?",
  "?", "?", "?", "?", "?", "?", "?", "?",
  "?", "?", "?", "?", "?", "?", "?", "?",
  "?", "?", "?", "?", "?", "?", "?", "?",
];

export const CELL_PIXELS = 28;

export function drawFrame(ctx: CanvasRenderingContext2D, frame: Frame): void {
  const size = CELL_PIXELS;
  ctx.fillStyle = "#111";
  ctx.fillRect(0, 0, frame.width * size, frame.height * size);
  ctx.font = `${size - 8}px monospace`;
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  for (let y = 0; y < frame.height; y++) {
    for (let x = 0; x < frame.width; x++) {
      const idx = 2 * (y * frame.width + x);
      const symbol = frame.cells[idx];
      const color = frame.cells[idx + 1];
      if (symbol === 1) {
        ctx.fillStyle = "#1c1f24";
        ctx.fillRect(x * size, y * size, size - 1, size - 1);
        continue;
      }
      if (symbol === 2) {
        ctx.fillStyle = "#3c4043";
        ctx.fillRect(x * size, y * size, size - 1, size - 1);
        continue;
      }
      ctx.fillStyle = "#1c1f24";
      ctx.fillRect(x * size, y * size, size - 1, size - 1);
      if (symbol === 0) continue;
      ctx.fillStyle = PALETTE[color] ?? PALETTE[0];
      ctx.fillText(GLYPHS[symbol] ?? "?", x * size + size / 2, y * size + size / 2);
    }
  }
}

export function drawOverlay(el: HTMLElement, lines: string[]): void {
  el.textContent = lines.join("\n");
}
