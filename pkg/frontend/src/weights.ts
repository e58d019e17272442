/**
 * Client-side mirror of the checklist weight rule: an item weight is
 * either absent or an integer in [0, 100].
 */
export function weightError(raw: string): string | null {
  const text = raw.trim();
  if (text === "") {
    return null; // unweighted item
  }
  const value = Number(text);
  if (!Number.isInteger(value)) {
    return "weight must be a whole number";
  }
  if (value < 0 || value > 100) {
    return "weight must be between 0 and 100";
  }
  return null;
}

/** Parse a validated weight field: empty string means no weight. */
export function parseWeight(raw: string): number | undefined {
  const text = raw.trim();
  return text === "" ? undefined : Number(text);
}
