export function formatScore(value: number | null | undefined): string {
  return value == null ? "—" : value.toFixed(3);
}

export function formatPercent(value: number | null | undefined): string {
  return value == null ? "—" : `${(value * 100).toFixed(1)}%`;
}
