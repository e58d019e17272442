import { batchStatus } from "./api";
import type { BatchJobDoc } from "./types";

const TERMINAL_STATES = new Set(["done", "failed", "cancelled"]);

export interface PollOptions {
  onStatus?: (job: BatchJobDoc) => void;
  intervalMs?: number;
  maxIntervalMs?: number;
  backoff?: number;
  fetchStatus?: (jobId: string) => Promise<BatchJobDoc>;
  signal?: AbortSignal;
}

/**
 * Poll a batch job until it reaches a terminal state (done / failed /
 * cancelled). The interval starts at intervalMs and grows by the backoff
 * factor up to maxIntervalMs. Resolves with the final job document.
 */
export function pollBatchJob(jobId: string, options: PollOptions = {}): Promise<BatchJobDoc> {
  const {
    onStatus,
    intervalMs = 1000,
    maxIntervalMs = 5000,
    backoff = 1.5,
    fetchStatus = batchStatus,
    signal,
  } = options;

  return new Promise((resolve, reject) => {
    let delay = intervalMs;

    const step = async () => {
      if (signal?.aborted) {
        reject(new DOMException("polling aborted", "AbortError"));
        return;
      }
      let job: BatchJobDoc;
      try {
        job = await fetchStatus(jobId);
      } catch (error) {
        reject(error);
        return;
      }
      onStatus?.(job);
      if (TERMINAL_STATES.has(job.state)) {
        resolve(job);
        return;
      }
      delay = Math.min(delay * backoff, maxIntervalMs);
      setTimeout(step, delay);
    };

    setTimeout(step, delay);
  });
}
