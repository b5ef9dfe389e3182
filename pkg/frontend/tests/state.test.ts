import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ChatStore } from "../src/state.js";
import { MockServer } from "./mockServer.js";

let server: MockServer;
let store: ChatStore;

beforeEach(async () => {
  server = new MockServer();
  store = new ChatStore(new ApiClient("", server.fetch));
  await store.loadPalette();
  await store.startSession();
});

describe("ChatStore.sendTurn", () => {
  it("appends the user turn and the confirmed model reply", async () => {
    const ok = await store.sendTurn("hello there");
    expect(ok).toBe(true);
    expect(store.state.messages).toHaveLength(2);
    const [user, reply] = store.state.messages;
    expect(user!.speaker).toBe(1);
    expect(user!.text).toBe("hello there");
    expect(user!.pending).toBeUndefined();
    expect(reply!.speaker).toBe(2);
    expect(reply!.usageProb).toBeGreaterThan(0);
    expect(reply!.rankedMemes!.length).toBeGreaterThan(0);
    expect(reply!.attention!.tokens.length).toBe(reply!.attention!.weights.length);
  });

  it("accepts meme-only turns", async () => {
    const ok = await store.sendTurn(undefined, 3);
    expect(ok).toBe(true);
    expect(store.state.messages[0]!.memeId).toBe(3);
    expect(store.state.messages[0]!.text).toBe("");
  });

  it("refuses an empty composition without calling the server", async () => {
    const ok = await store.sendTurn("   ");
    expect(ok).toBe(false);
    expect(store.state.messages).toHaveLength(0);
    expect(store.state.error).toMatch(/compose/);
  });

  it("rolls back the optimistic bubble on 409 with no duplicate entry", async () => {
    server.failNextWith = 409;
    const ok = await store.sendTurn("hi");
    expect(ok).toBe(false);
    expect(store.state.messages).toHaveLength(0);
    expect(store.state.error).toMatch(/previous turn/);
    // a retry goes through cleanly
    expect(await store.sendTurn("hi")).toBe(true);
    expect(store.state.messages).toHaveLength(2);
  });

  it("rolls back on server errors and surfaces the detail", async () => {
    server.failNextWith = 422;
    const ok = await store.sendTurn("x");
    expect(ok).toBe(false);
    expect(store.state.messages).toHaveLength(0);
    expect(store.state.error).toMatch(/injected 422/);
  });

  it("notifies subscribers on every transition", async () => {
    const snapshots: number[] = [];
    store.subscribe((s) => snapshots.push(s.messages.length));
    await store.sendTurn("one");
    // optimistic render (1 message) then confirmation (2 messages)
    expect(snapshots).toContain(1);
    expect(snapshots[snapshots.length - 1]).toBe(2);
  });
});

describe("ChatStore.syncHistory", () => {
  it("matches the server transcript exactly after 10 mixed turns", async () => {
    for (let i = 0; i < 10; i++) {
      if (i % 3 === 0) await store.sendTurn(undefined, i % 8);
      else if (i % 3 === 1) await store.sendTurn(`turn ${i}`);
      else await store.sendTurn(`turn ${i}`, i % 8);
    }
    expect(store.state.messages).toHaveLength(20);
    const rendered = store.state.messages.map((m) => [m.speaker, m.text, m.memeId]);
    await store.syncHistory();
    const synced = store.state.messages.map((m) => [m.speaker, m.text, m.memeId]);
    expect(synced).toEqual(rendered);

    const history = await new ApiClient("", server.fetch).getHistory(
      store.state.sessionId!,
    );
    expect(synced).toEqual(
      history.utterances.map((u) => [u.speaker, u.text, u.meme_id]),
    );
  });

  it("keeps reply badges attached across a sync", async () => {
    await store.sendTurn("hello");
    await store.syncHistory();
    const reply = store.state.messages[1]!;
    expect(reply.usageProb).toBeDefined();
    expect(reply.attention).toBeDefined();
  });
});

describe("controls", () => {
  it("toggles the overlay", () => {
    expect(store.state.overlayEnabled).toBe(true);
    store.toggleOverlay();
    expect(store.state.overlayEnabled).toBe(false);
  });

  it("merges sampler settings", () => {
    store.setSampler({ top_p: 0.5 });
    store.setSampler({ temperature: 0.3 });
    expect(store.state.sampler).toEqual({ top_p: 0.5, temperature: 0.3 });
  });
});
