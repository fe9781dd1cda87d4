/** SHA-256 hex digest of UTF-8 text via Web Crypto (browser and node 20). */
export async function sha256Hex(text: string): Promise<string> {
  const bytes = new TextEncoder().encode(text);
  const digest = await crypto.subtle.digest("SHA-256", bytes);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}

/**
 * Guard that span offsets refer to the exact served text. Throws when the
 * local copy no longer matches the hash the task shipped with.
 */
export async function verifyServedText(text: string, expectedSha256: string): Promise<void> {
  const actual = await sha256Hex(text);
  if (actual !== expectedSha256) {
    throw new Error(
      `served text hash mismatch: expected ${expectedSha256}, got ${actual}`,
    );
  }
}
