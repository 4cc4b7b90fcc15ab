import { readFileSync } from "node:fs";

export interface PostRecord {
  user_id: string;
  community_id: string;
  timestamp: number;
  text: string;
}

export interface MetaRecord {
  community_id: string;
  description: string;
}

function parseLines(path: string): { lineno: number; value: unknown }[] {
  const raw = readFileSync(path, "utf8");
  const out: { lineno: number; value: unknown }[] = [];
  const lines = raw.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "") continue;
    let value: unknown;
    try {
      value = JSON.parse(line);
    } catch {
      throw new Error(`${path}: line ${i + 1}: invalid JSON`);
    }
    out.push({ lineno: i + 1, value });
  }
  return out;
}

function requireString(rec: Record<string, unknown>, field: string, path: string, lineno: number): string {
  const v = rec[field];
  if (typeof v !== "string") {
    throw new Error(`${path}: line ${lineno}: field "${field}" must be a string`);
  }
  return v;
}

export function readPosts(path: string): PostRecord[] {
  return parseLines(path).map(({ lineno, value }) => {
    if (typeof value !== "object" || value === null || Array.isArray(value)) {
      throw new Error(`${path}: line ${lineno}: expected a JSON object`);
    }
    const rec = value as Record<string, unknown>;
    const ts = rec.timestamp;
    if (typeof ts !== "number" || !Number.isInteger(ts) || ts < 0) {
      throw new Error(`${path}: line ${lineno}: field "timestamp" must be a nonnegative integer`);
    }
    return {
      user_id: requireString(rec, "user_id", path, lineno),
      community_id: requireString(rec, "community_id", path, lineno),
      timestamp: ts,
      text: typeof rec.text === "string" ? rec.text : requireString(rec, "text", path, lineno),
    };
  });
}

export function readMeta(path: string): MetaRecord[] {
  return parseLines(path).map(({ lineno, value }) => {
    if (typeof value !== "object" || value === null || Array.isArray(value)) {
      throw new Error(`${path}: line ${lineno}: expected a JSON object`);
    }
    const rec = value as Record<string, unknown>;
    return {
      community_id: requireString(rec, "community_id", path, lineno),
      description: requireString(rec, "description", path, lineno),
    };
  });
}
