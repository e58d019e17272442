import type {
  BatchJobDoc,
  BatchResultsResponse,
  Collection,
  CompareResponse,
  EvaluateResponse,
  LibraryListEntry,
  RegistryResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(path, init);
  if (!response.ok) {
    const detail = await extractDetail(response);
    throw new ApiError(detail, response.status);
  }
  return (await response.json()) as T;
}

async function extractDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") {
      return body.detail;
    }
    return JSON.stringify(body);
  } catch {
    return `${response.status} ${response.statusText}`;
  }
}

function post<T>(path: string, body: unknown): Promise<T> {
  return request<T>(path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
}

export function fetchRegistry(): Promise<RegistryResponse> {
  return request("/api/registry");
}

export function evaluate(body: Record<string, unknown>): Promise<EvaluateResponse> {
  return post("/api/evaluate", body);
}

export function compare(body: Record<string, unknown>): Promise<CompareResponse> {
  return post("/api/compare", body);
}

export function listLibrary(collection: Collection): Promise<{ items: LibraryListEntry[] }> {
  return request(`/api/library/${collection}`);
}

export function getEntry<T>(collection: Collection, id: string): Promise<T> {
  return request(`/api/library/${collection}/${id}`);
}

export function createEntry<T>(collection: Collection, body: unknown): Promise<T> {
  return post(`/api/library/${collection}`, body);
}

export function updateEntry<T>(collection: Collection, id: string, body: unknown): Promise<T> {
  return request(`/api/library/${collection}/${id}`, {
    method: "PUT",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
}

export function deleteEntry(collection: Collection, id: string): Promise<{ deleted: string }> {
  return request(`/api/library/${collection}/${id}`, { method: "DELETE" });
}

export function startBatch(body: Record<string, unknown>): Promise<{ job_id: string }> {
  return post("/api/batch", body);
}

export function batchStatus(jobId: string): Promise<BatchJobDoc> {
  return request(`/api/batch/${jobId}`);
}

export function batchResults(jobId: string): Promise<BatchResultsResponse> {
  return request(`/api/batch/${jobId}/results`);
}

export function cancelBatch(jobId: string): Promise<{ job_id: string; cancel_requested: boolean }> {
  return post(`/api/batch/${jobId}/cancel`, {});
}

export async function fetchBatchScript(jobId: string): Promise<string> {
  const response = await fetch(`/api/batch/${jobId}/export`);
  if (!response.ok) {
    throw new ApiError(await extractDetail(response), response.status);
  }
  return response.text();
}
