import { createHash } from "node:crypto";

export interface EmbeddingProvider {
  readonly name: string;
  /** Embed one batch of already-truncated texts; vectors come back in input order. */
  embedBatch(texts: string[]): Promise<number[][]>;
}

const TOKEN_RE = /[\p{L}\p{N}_]{2,}/gu;

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(TOKEN_RE) ?? [];
}

/** Keep only the first `limit` tokens of the text (joined back with spaces). */
export function truncateTokens(text: string, limit: number): { text: string; truncated: boolean } {
  const tokens = tokenize(text);
  if (tokens.length <= limit) {
    return { text, truncated: false };
  }
  return { text: tokens.slice(0, limit).join(" "), truncated: true };
}

/**
 * Deterministic local encoder built on the hashing trick: each token is
 * sha256-hashed into one of `dim` buckets, bucket counts are accumulated, and
 * the count vector is L2-normalized.  Counts are nonnegative, so any text with
 * at least one token yields a nonzero vector.  Token-less text gets the
 * encoder's fixed empty-string embedding -- the first basis vector -- because
 * downstream import rejects all-zero rows.
 */
export class HashingProvider implements EmbeddingProvider {
  readonly name = "hashing";
  readonly dim: number;

  constructor(dim: number) {
    if (!Number.isInteger(dim) || dim < 2) {
      throw new Error(`hashing provider dim must be an integer >= 2, got ${dim}`);
    }
    this.dim = dim;
  }

  embedOne(text: string): number[] {
    const counts = new Array<number>(this.dim).fill(0);
    const tokens = tokenize(text);
    if (tokens.length === 0) {
      counts[0] = 1;
      return counts;
    }
    for (const token of tokens) {
      const digest = createHash("sha256").update(token, "utf8").digest();
      counts[digest.readUInt32BE(0) % this.dim] += 1;
    }
    const norm = Math.sqrt(counts.reduce((acc, c) => acc + c * c, 0));
    return counts.map((c) => c / norm);
  }

  async embedBatch(texts: string[]): Promise<number[][]> {
    return texts.map((t) => this.embedOne(t));
  }
}

export interface ApiProviderOptions {
  baseUrl?: string;
  apiKey?: string;
  model?: string;
  maxRetries?: number;
  retryBaseMs?: number;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * OpenAI-compatible embeddings endpoint.  The base URL and key come from
 * EMBEDDINGS_API_BASE / EMBEDDINGS_API_KEY unless passed explicitly.  Requests
 * are retried with exponential backoff on 429/5xx and network errors; anything
 * else fails the batch immediately.
 */
export class ApiProvider implements EmbeddingProvider {
  readonly name = "api";
  readonly baseUrl: string;
  readonly model: string;
  private readonly apiKey: string | undefined;
  private readonly maxRetries: number;
  private readonly retryBaseMs: number;

  constructor(options: ApiProviderOptions = {}) {
    const base = options.baseUrl ?? process.env.EMBEDDINGS_API_BASE;
    if (!base) {
      throw new Error("api provider needs a base URL (EMBEDDINGS_API_BASE or --api-base)");
    }
    this.baseUrl = base.replace(/\/+$/, "");
    this.apiKey = options.apiKey ?? process.env.EMBEDDINGS_API_KEY;
    this.model = options.model ?? "text-embedding-3-small";
    this.maxRetries = options.maxRetries ?? 3;
    this.retryBaseMs = options.retryBaseMs ?? 500;
  }

  async embedBatch(texts: string[]): Promise<number[][]> {
    let lastFailure = "";
    for (let attempt = 0; attempt <= this.maxRetries; attempt++) {
      if (attempt > 0) {
        await sleep(this.retryBaseMs * 2 ** (attempt - 1));
      }
      let res: Response;
      try {
        res = await fetch(`${this.baseUrl}/embeddings`, {
          method: "POST",
          headers: this.headers(),
          body: JSON.stringify({ model: this.model, input: texts }),
        });
      } catch (err) {
        lastFailure = `network error: ${(err as Error).message}`;
        continue;
      }
      if (res.status === 429 || res.status >= 500) {
        lastFailure = `HTTP ${res.status}: ${await res.text()}`;
        continue;
      }
      if (!res.ok) {
        throw new Error(`embeddings request failed with HTTP ${res.status}: ${await res.text()}`);
      }
      return this.parseResponse(await res.json(), texts.length);
    }
    throw new Error(`embeddings request failed after ${this.maxRetries + 1} attempts; last: ${lastFailure}`);
  }

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.apiKey) {
      headers.Authorization = `Bearer ${this.apiKey}`;
    }
    return headers;
  }

  private parseResponse(payload: unknown, expected: number): number[][] {
    const data = (payload as { data?: { index?: number; embedding?: unknown }[] }).data;
    if (!Array.isArray(data) || data.length !== expected) {
      throw new Error(`embeddings response has ${data?.length ?? "no"} rows, expected ${expected}`);
    }
    const rows = [...data].sort((a, b) => (a.index ?? 0) - (b.index ?? 0));
    return rows.map((row, i) => {
      const vec = row.embedding;
      if (!Array.isArray(vec) || vec.length === 0 || !vec.every((x) => typeof x === "number" && Number.isFinite(x))) {
        throw new Error(`embeddings response row ${i} is not a finite numeric vector`);
      }
      return vec as number[];
    });
  }
}
