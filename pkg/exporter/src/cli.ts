#!/usr/bin/env node
/**
 * embed-exporter --posts posts.jsonl --out embeddings.jsonl --provider hashing --dim 256
 * embed-exporter --meta meta.jsonl --out embeddings.jsonl --provider api --model text-embedding-3-small
 *
 * Reads the engine's posts.jsonl or meta.jsonl, embeds each record's text, and
 * writes embeddings.jsonl (one {"id", "vector"} per line, input order) plus a
 * <out>.manifest.json with counts, truncations, empty-text flags, and
 * per-record provider failures.  The api provider reads EMBEDDINGS_API_BASE
 * and EMBEDDINGS_API_KEY from the environment unless --api-base is given.
 */
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { exportEmbeddings, type ExportRecord } from "./exporter.js";
import { readMeta, readPosts } from "./jsonl.js";
import { postId } from "./postid.js";
import { ApiProvider, HashingProvider, type EmbeddingProvider } from "./providers.js";

const USAGE = `usage: embed-exporter (--posts F | --meta F) --out F [options]

options:
  --provider hashing|api   encoder to use (default: hashing)
  --dim N                  hashing provider dimensionality (default: 256)
  --model NAME             api provider model (default: text-embedding-3-small)
  --api-base URL           api endpoint base; else EMBEDDINGS_API_BASE
  --batch-size N           records per provider call (default: 64)
  --truncate N             per-record token budget (default: 8191)
  --concurrency N          in-flight batches (default: 2)
  --max-retries N          api retry attempts after the first try (default: 3)
  --retry-base-ms N        backoff base in milliseconds (default: 500)
  --manifest F             manifest path (default: <out>.manifest.json)
`;

function intFlag(value: string | undefined, name: string, fallback: number): number {
  if (value === undefined) return fallback;
  const parsed = Number(value);
  if (!Number.isInteger(parsed)) {
    throw new Error(`--${name} must be an integer, got ${JSON.stringify(value)}`);
  }
  return parsed;
}

export async function main(argv: string[]): Promise<number> {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        posts: { type: "string" },
        meta: { type: "string" },
        out: { type: "string" },
        provider: { type: "string", default: "hashing" },
        dim: { type: "string" },
        model: { type: "string" },
        "api-base": { type: "string" },
        "batch-size": { type: "string" },
        truncate: { type: "string" },
        concurrency: { type: "string" },
        "max-retries": { type: "string" },
        "retry-base-ms": { type: "string" },
        manifest: { type: "string" },
        help: { type: "boolean", default: false },
      },
      allowPositionals: false,
    }));
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return 1;
  }
  if (values.help) {
    console.log(USAGE);
    return 0;
  }

  try {
    if (!values.out) {
      throw new Error("--out is required");
    }
    if ((values.posts === undefined) === (values.meta === undefined)) {
      throw new Error("pass exactly one of --posts or --meta");
    }

    let records: ExportRecord[];
    if (values.posts !== undefined) {
      records = readPosts(values.posts).map((p) => ({ id: postId(p), text: p.text }));
    } else {
      records = readMeta(values.meta!).map((m) => ({ id: m.community_id, text: m.description }));
    }

    let provider: EmbeddingProvider;
    if (values.provider === "hashing") {
      provider = new HashingProvider(intFlag(values.dim, "dim", 256));
    } else if (values.provider === "api") {
      provider = new ApiProvider({
        baseUrl: values["api-base"],
        model: values.model,
        maxRetries: intFlag(values["max-retries"], "max-retries", 3),
        retryBaseMs: intFlag(values["retry-base-ms"], "retry-base-ms", 500),
      });
    } else {
      throw new Error(`unknown provider ${JSON.stringify(values.provider)}; use hashing or api`);
    }

    const manifestPath = values.manifest ?? `${values.out}.manifest.json`;
    const manifest = await exportEmbeddings(records, provider, values.out, manifestPath, {
      batchSize: intFlag(values["batch-size"], "batch-size", 64),
      truncate: intFlag(values.truncate, "truncate", 8191),
      concurrency: intFlag(values.concurrency, "concurrency", 2),
    });
    const flagged = manifest.empty_text_ids.length;
    console.log(
      `embedded ${manifest.embedded}/${manifest.records} records at dim ${manifest.dim}` +
        (manifest.failed ? `, ${manifest.failed} failed` : "") +
        (manifest.truncated ? `, ${manifest.truncated} truncated` : "") +
        (flagged ? `, ${flagged} empty-text` : "") +
        ` -> ${values.out}`,
    );
    return manifest.failed > 0 ? 1 : 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const invokedDirectly = process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
