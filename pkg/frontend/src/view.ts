import { buildOverlay } from "./attention.js";
import type { ChatMessage } from "./state.js";
import type { MemeSummary } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function memeImageUrl(palette: MemeSummary[], memeId: number): string {
  const entry = palette.find((m) => m.id === memeId);
  return entry ? entry.image_url : `/api/v1/memes/${memeId}/image`;
}

/** One chat bubble; model turns get a meme thumbnail, a usage badge, an
 * expandable alternatives list, and (when enabled) the attention heatmap. */
export function renderMessage(
  msg: ChatMessage,
  palette: MemeSummary[],
  overlayEnabled: boolean,
): HTMLElement {
  const who = msg.speaker === 1 ? "user" : "model";
  const root = el("div", `msg msg-${who}${msg.pending ? " msg-pending" : ""}`);

  if (msg.text) root.appendChild(el("div", "msg-text", msg.text));

  if (msg.memeId !== null) {
    const img = el("img", "meme-thumb");
    img.src = memeImageUrl(palette, msg.memeId);
    img.alt = `meme ${msg.memeId}`;
    root.appendChild(img);
  }

  if (msg.usageProb !== undefined) {
    const badge = el("span", "usage-badge", `meme ${(msg.usageProb * 100).toFixed(0)}%`);
    badge.title = "probability the model wanted a meme on this turn";
    root.appendChild(badge);
  }

  if (msg.rankedMemes && msg.rankedMemes.length > 0) {
    const details = el("details", "alternatives");
    details.appendChild(el("summary", undefined, "alternatives"));
    const list = el("ul");
    for (const cand of msg.rankedMemes) {
      const item = el("li", "alternative");
      const img = el("img", "meme-thumb-small");
      img.src = memeImageUrl(palette, cand.id);
      img.alt = `meme ${cand.id}`;
      item.appendChild(img);
      item.appendChild(el("span", undefined, `#${cand.id} d=${cand.distance.toFixed(3)}`));
      list.appendChild(item);
    }
    details.appendChild(list);
    root.appendChild(details);
  }

  if (overlayEnabled && msg.attention) {
    root.appendChild(renderAttention(msg.attention.tokens, msg.attention.weights));
  }
  return root;
}

/** Token heatmap behind a retrieved meme; disabled with a warning when the
 * token and weight vectors disagree. */
export function renderAttention(tokens: string[], weights: number[]): HTMLElement {
  const overlay = buildOverlay(tokens, weights);
  const root = el("div", "attention");
  if (!overlay) {
    const warning = el("div", "attention-warning",
      "attention overlay disabled: token/weight length mismatch");
    root.appendChild(warning);
    return root;
  }
  for (const cell of overlay.cells) {
    const span = el("span", "attention-token", cell.token);
    span.style.backgroundColor = `rgba(247, 118, 142, ${(0.85 * cell.intensity).toFixed(3)})`;
    span.title = cell.weight.toFixed(4);
    root.appendChild(span);
  }
  root.appendChild(
    el("span", "attention-sum", `sum ${overlay.weightSum.toFixed(3)}`),
  );
  return root;
}

export function renderMessages(
  container: HTMLElement,
  messages: ChatMessage[],
  palette: MemeSummary[],
  overlayEnabled: boolean,
): void {
  container.replaceChildren(
    ...messages.map((m) => renderMessage(m, palette, overlayEnabled)),
  );
}

/** Palette grid grouped by the four catalog groups. */
export function renderPalette(
  container: HTMLElement,
  palette: MemeSummary[],
  selected: number | null,
  onPick: (memeId: number) => void,
): void {
  const groups = new Map<string, MemeSummary[]>();
  for (const meme of palette) {
    const bucket = groups.get(meme.group) ?? [];
    bucket.push(meme);
    groups.set(meme.group, bucket);
  }
  container.replaceChildren();
  for (const [group, memes] of groups) {
    const section = el("section", "palette-group");
    section.appendChild(el("h3", undefined, group.replaceAll("_", " ")));
    const grid = el("div", "palette-grid");
    for (const meme of memes) {
      const button = el("button", `palette-cell${selected === meme.id ? " selected" : ""}`);
      button.type = "button";
      const img = el("img");
      img.src = meme.image_url;
      img.alt = `meme ${meme.id}`;
      button.appendChild(img);
      button.appendChild(el("span", "palette-label", meme.emotions[0] ?? group));
      button.addEventListener("click", () => onPick(meme.id));
      grid.appendChild(button);
    }
    section.appendChild(grid);
    container.appendChild(section);
  }
}

export function renderError(container: HTMLElement, error: string | null): void {
  container.textContent = error ?? "";
  container.style.display = error ? "block" : "none";
}
