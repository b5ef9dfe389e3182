// In-memory fake of the /api/v1 surface, faithful to the documented wire
// format and error semantics (404/409/422). Lets the client tests exercise
// the real request/response cycle hermetically.

import type { FetchLike } from "../src/api.js";
import type { MemeSummary, UtterancePayload } from "../src/types.js";

interface MockSession {
  id: string;
  utterances: UtterancePayload[];
  turn: number;
}

const GROUPS = [
  "atmosphere_adjustment",
  "basic_expression",
  "basic_emotion",
  "common_semantics",
];

export class MockServer {
  sessions = new Map<string, MockSession>();
  busySessions = new Set<string>();
  failNextWith: number | null = null;
  private counter = 0;

  readonly memes: MemeSummary[] = Array.from({ length: 8 }, (_, i) => ({
    id: i,
    group: GROUPS[i % 4]!,
    emotions: [["joy", "sad", "angry", "calm"][i % 4]!],
    ocr: i % 2 === 0 ? `caption ${i}` : null,
    image_url: `/api/v1/memes/${i}/image`,
  }));

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : {};
    const path = url.replace(/^https?:\/\/[^/]+/, "");

    if (this.failNextWith !== null) {
      const status = this.failNextWith;
      this.failNextWith = null;
      return json(status, { detail: `injected ${status}` });
    }

    if (path === "/api/v1/memes" && method === "GET") {
      return json(200, { api_version: "v1", feature_dim: 16, memes: this.memes });
    }
    if (path === "/api/v1/sessions" && method === "POST") {
      const id = `s${this.counter++}`;
      this.sessions.set(id, { id, utterances: [], turn: 0 });
      return json(201, {
        api_version: "v1",
        session_id: id,
        seed: body.seed ?? 0,
        created_at: 0,
      });
    }

    const messages = path.match(/^\/api\/v1\/sessions\/([^/]+)\/messages$/);
    if (messages && method === "POST") {
      const session = this.sessions.get(messages[1]!);
      if (!session) return json(404, { detail: "unknown session" });
      if (this.busySessions.has(session.id)) {
        return json(409, { detail: "session busy with another turn" });
      }
      const text = typeof body.text === "string" ? body.text.trim() : "";
      const memeId = typeof body.meme_id === "number" ? body.meme_id : null;
      if (!text && memeId === null) {
        return json(422, { detail: "message needs text, a meme, or both" });
      }
      const user: UtterancePayload = {
        speaker: 1,
        text,
        meme_id: memeId,
        emotion: null,
      };
      const replyMeme = session.turn % 2 === 0 ? session.turn % 8 : null;
      const replyText = replyMeme === null ? `re ${session.turn}` : "";
      const reply: UtterancePayload = {
        speaker: 2,
        text: replyText,
        meme_id: replyMeme ?? (replyText ? null : 0),
        emotion: null,
      };
      session.utterances.push(user, reply);
      const contextTokens = [
        "[speaker1]", "[bos]", ...text.split(/\s+/).filter(Boolean), "[eos]",
        "[tag]",
      ];
      const weights = contextTokens.map(() => 1 / contextTokens.length);
      const turnIndex = session.turn;
      session.turn += 1;
      return json(200, {
        api_version: "v1",
        session_id: session.id,
        turn_index: turnIndex,
        user,
        reply: {
          text: reply.text,
          meme_id: reply.meme_id,
          usage_prob: reply.meme_id !== null ? 0.91 : 0.12,
          ranked_memes: [
            { id: 0, distance: 0.21 },
            { id: 3, distance: 0.8 },
            { id: 5, distance: 1.4 },
          ],
          attention: { tokens: contextTokens, weights },
        },
      });
    }

    const history = path.match(/^\/api\/v1\/sessions\/([^/]+)\/history$/);
    if (history && method === "GET") {
      const session = this.sessions.get(history[1]!);
      if (!session) return json(404, { detail: "unknown session" });
      return json(200, {
        api_version: "v1",
        session_id: session.id,
        utterances: session.utterances,
      });
    }

    const drop = path.match(/^\/api\/v1\/sessions\/([^/]+)$/);
    if (drop && method === "DELETE") {
      if (!this.sessions.delete(drop[1]!)) return json(404, { detail: "unknown session" });
      return new Response(null, { status: 204 });
    }
    return json(404, { detail: `no route for ${method} ${path}` });
  };
}

function json(status: number, payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
