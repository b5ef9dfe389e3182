import { ApiClient } from "./api.js";
import { ChatStore } from "./state.js";
import { renderError, renderMessages, renderPalette } from "./view.js";

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

const api = new ApiClient("");
const store = new ChatStore(api);

let selectedMeme: number | null = null;

const messagesEl = byId("messages");
const paletteEl = byId("palette");
const errorEl = byId("error");
const input = byId("composer-text") as HTMLInputElement;
const sendButton = byId("composer-send") as HTMLButtonElement;
const overlayToggle = byId("overlay-toggle") as HTMLInputElement;
const selectedMemeEl = byId("composer-meme");
const topP = byId("sampler-top-p") as HTMLInputElement;
const temperature = byId("sampler-temperature") as HTMLInputElement;

function renderSelectedMeme(): void {
  selectedMemeEl.textContent =
    selectedMeme === null ? "no meme attached" : `meme #${selectedMeme} attached`;
}

store.subscribe((state) => {
  renderMessages(messagesEl, state.messages, state.palette, state.overlayEnabled);
  renderPalette(paletteEl, state.palette, selectedMeme, (memeId) => {
    selectedMeme = selectedMeme === memeId ? null : memeId;
    renderSelectedMeme();
  });
  renderError(errorEl, state.error);
  sendButton.disabled = state.busy;
  messagesEl.scrollTop = messagesEl.scrollHeight;
});

async function send(): Promise<void> {
  const text = input.value;
  const memeId = selectedMeme ?? undefined;
  input.value = "";
  selectedMeme = null;
  renderSelectedMeme();
  await store.sendTurn(text, memeId);
}

sendButton.addEventListener("click", () => void send());
input.addEventListener("keydown", (event) => {
  if (event.key === "Enter") void send();
});
overlayToggle.addEventListener("change", () => store.toggleOverlay());
for (const control of [topP, temperature]) {
  control.addEventListener("change", () => {
    store.setSampler({
      top_p: Number(topP.value) || undefined,
      temperature: Number(temperature.value) || undefined,
    });
  });
}

void (async () => {
  await store.loadPalette();
  await store.startSession({
    top_p: Number(topP.value) || undefined,
    temperature: Number(temperature.value) || undefined,
  });
  renderSelectedMeme();
})();
