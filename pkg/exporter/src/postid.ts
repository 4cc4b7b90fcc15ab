import { createHash } from "node:crypto";

import type { PostRecord } from "./jsonl.js";

/**
 * Stable 16-hex-char post id: sha256 over user id, community id, decimal
 * timestamp, and text, joined by the unit separator (0x1f).  This matches the
 * recommendation engine's documented hash, so files produced here join with
 * its artifacts without any shared database.
 */
export function postId(post: PostRecord): string {
  const key = [post.user_id, post.community_id, String(post.timestamp), post.text].join("\x1f");
  return createHash("sha256").update(Buffer.from(key, "utf8")).digest("hex").slice(0, 16);
}
