/**
 * Guard against out-of-order responses. Each request takes a ticket;
 * only the holder of the latest ticket may apply its response.
 */
export interface StaleGuard {
  next(): number;
  isCurrent(ticket: number): boolean;
}

export function makeStaleGuard(): StaleGuard {
  let latest = 0;
  return {
    next() {
      latest += 1;
      return latest;
    },
    isCurrent(ticket: number) {
      return ticket === latest;
    },
  };
}
