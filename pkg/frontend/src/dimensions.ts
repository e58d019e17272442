export interface DimensionDoc {
  name: string;
  description: string;
}

/** Parse "Name: description" lines into dimension documents. */
export function parseDimensions(text: string): DimensionDoc[] {
  const dimensions: DimensionDoc[] = [];
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed === "") continue;
    const colon = trimmed.indexOf(":");
    if (colon === -1) {
      dimensions.push({ name: trimmed, description: trimmed });
    } else {
      dimensions.push({
        name: trimmed.slice(0, colon).trim(),
        description: trimmed.slice(colon + 1).trim(),
      });
    }
  }
  return dimensions;
}
