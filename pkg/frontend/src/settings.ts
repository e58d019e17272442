/** Judge connection settings shared by every page. Empty fields fall back
 * to the service's own defaults (set via `autochecklist ui --provider ...`). */
export interface JudgeSettings {
  provider: string;
  model: string;
  baseUrl: string;
}

export const DEFAULT_SETTINGS: JudgeSettings = { provider: "", model: "", baseUrl: "" };

/** Merge non-empty judge settings into an API request body. */
export function withSettings(
  body: Record<string, unknown>,
  settings: JudgeSettings
): Record<string, unknown> {
  const merged = { ...body };
  if (settings.provider) merged.provider = settings.provider;
  if (settings.model) merged.model = settings.model;
  if (settings.baseUrl) merged.base_url = settings.baseUrl;
  return merged;
}
