import { writeFileSync } from "node:fs";

import type { EmbeddingProvider } from "./providers.js";
import { truncateTokens } from "./providers.js";

export interface ExportRecord {
  id: string;
  text: string;
}

export interface ExportOptions {
  batchSize?: number;
  /** token budget per record; anything longer is cut to its first N tokens */
  truncate?: number;
  /** bounded number of in-flight batches */
  concurrency?: number;
}

export interface ExportManifest {
  provider: string;
  dim: number;
  records: number;
  embedded: number;
  failed: number;
  truncated: number;
  empty_text_ids: string[];
  errors: { id: string; message: string }[];
}

interface BatchOutcome {
  vectors?: number[][];
  error?: string;
}

async function mapBounded<T, R>(
  items: T[],
  concurrency: number,
  worker: (item: T, index: number) => Promise<R>,
): Promise<R[]> {
  const results = new Array<R>(items.length);
  let next = 0;
  const lanes = Array.from({ length: Math.max(1, Math.min(concurrency, items.length)) }, async () => {
    while (next < items.length) {
      const index = next++;
      results[index] = await worker(items[index], index);
    }
  });
  await Promise.all(lanes);
  return results;
}

/**
 * Embed every record and write the engine-compatible embeddings JSONL plus a
 * manifest.  Output rows keep input order.  A batch whose provider call fails
 * (after the provider's own retries) turns into per-record error entries in
 * the manifest instead of output rows; inconsistent vector dimensionality
 * across batches aborts the whole export, since a mixed-dim file would be
 * useless downstream.
 */
export async function exportEmbeddings(
  records: ExportRecord[],
  provider: EmbeddingProvider,
  outPath: string,
  manifestPath: string,
  options: ExportOptions = {},
): Promise<ExportManifest> {
  if (records.length === 0) {
    throw new Error("nothing to embed: the input file has no records");
  }
  const batchSize = options.batchSize ?? 64;
  const truncate = options.truncate ?? 8191;
  const concurrency = options.concurrency ?? 2;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new Error(`batch size must be a positive integer, got ${batchSize}`);
  }
  if (!Number.isInteger(truncate) || truncate < 1) {
    throw new Error(`truncation limit must be a positive integer, got ${truncate}`);
  }
  if (!Number.isInteger(concurrency) || concurrency < 1) {
    throw new Error(`concurrency must be a positive integer, got ${concurrency}`);
  }

  const seen = new Set<string>();
  for (const rec of records) {
    if (seen.has(rec.id)) {
      throw new Error(`duplicate record id ${JSON.stringify(rec.id)}; output ids must be unique`);
    }
    seen.add(rec.id);
  }

  const emptyIds = records.filter((r) => r.text.trim() === "").map((r) => r.id);
  let truncatedCount = 0;
  const prepared = records.map((r) => {
    const { text, truncated } = truncateTokens(r.text, truncate);
    if (truncated) truncatedCount++;
    return text;
  });

  const batches: { start: number; texts: string[] }[] = [];
  for (let start = 0; start < records.length; start += batchSize) {
    batches.push({ start, texts: prepared.slice(start, start + batchSize) });
  }

  const outcomes = await mapBounded<{ start: number; texts: string[] }, BatchOutcome>(
    batches,
    concurrency,
    async (batch) => {
      try {
        const vectors = await provider.embedBatch(batch.texts);
        if (vectors.length !== batch.texts.length) {
          return { error: `provider returned ${vectors.length} vectors for ${batch.texts.length} inputs` };
        }
        return { vectors };
      } catch (err) {
        return { error: (err as Error).message };
      }
    },
  );

  let dim = 0;
  const errors: { id: string; message: string }[] = [];
  const lines: string[] = [];
  let embedded = 0;
  for (let b = 0; b < batches.length; b++) {
    const { start } = batches[b];
    const outcome = outcomes[b];
    if (outcome.error !== undefined) {
      for (let i = 0; i < batches[b].texts.length; i++) {
        errors.push({ id: records[start + i].id, message: outcome.error });
      }
      continue;
    }
    for (let i = 0; i < outcome.vectors!.length; i++) {
      const id = records[start + i].id;
      const vector = outcome.vectors![i];
      if (!vector.every((x) => Number.isFinite(x))) {
        throw new Error(`provider returned a non-finite vector for ${JSON.stringify(id)}; aborting`);
      }
      if (vector.every((x) => x === 0)) {
        throw new Error(`provider returned an all-zero vector for ${JSON.stringify(id)}; aborting`);
      }
      if (dim === 0) {
        dim = vector.length;
      } else if (vector.length !== dim) {
        throw new Error(
          `dimension drift: ${JSON.stringify(id)} came back with dim ${vector.length}, earlier rows had ${dim}; aborting`,
        );
      }
      lines.push(JSON.stringify({ id, vector }));
      embedded++;
    }
  }
  if (embedded === 0) {
    throw new Error(`every batch failed; first error: ${errors[0]?.message ?? "(none)"}`);
  }

  writeFileSync(outPath, lines.join("\n") + "\n", "utf8");
  const manifest: ExportManifest = {
    provider: provider.name,
    dim,
    records: records.length,
    embedded,
    failed: errors.length,
    truncated: truncatedCount,
    empty_text_ids: emptyIds,
    errors,
  };
  writeFileSync(manifestPath, JSON.stringify(manifest, null, 2) + "\n", "utf8");
  return manifest;
}
