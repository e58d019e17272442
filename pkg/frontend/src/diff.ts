import type { ChecklistDoc, ChecklistItemDoc } from "./types";

export interface ItemChange {
  id: string;
  kind: "changed" | "added" | "removed";
  before?: ChecklistItemDoc;
  after?: ChecklistItemDoc;
}

function sameItem(a: ChecklistItemDoc, b: ChecklistItemDoc): boolean {
  return (
    a.question === b.question &&
    (a.weight ?? null) === (b.weight ?? null) &&
    (a.dimension ?? null) === (b.dimension ?? null) &&
    JSON.stringify(a.tags ?? []) === JSON.stringify(b.tags ?? [])
  );
}

/** Item-level difference between two versions of a checklist, by item id. */
export function checklistDiff(before: ChecklistDoc, after: ChecklistDoc): ItemChange[] {
  const changes: ItemChange[] = [];
  const beforeById = new Map(before.items.map((item) => [item.id, item]));
  const afterById = new Map(after.items.map((item) => [item.id, item]));

  for (const item of before.items) {
    const updated = afterById.get(item.id);
    if (updated === undefined) {
      changes.push({ id: item.id, kind: "removed", before: item });
    } else if (!sameItem(item, updated)) {
      changes.push({ id: item.id, kind: "changed", before: item, after: updated });
    }
  }
  for (const item of after.items) {
    if (!beforeById.has(item.id)) {
      changes.push({ id: item.id, kind: "added", after: item });
    }
  }
  return changes;
}
