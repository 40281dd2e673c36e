/** Thin fetch client for the analysis service JSON API. */

import type { AnalysisResults, JobStatus, SearchHistory, ToxicityReport } from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = 'ApiError';
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class AnalysisApi {
  constructor(readonly baseUrl: string = '') {}

  createAnalysis(
    species: string,
    maxPapers: number,
    strategy?: string,
  ): Promise<{ job_id: string; state: string }> {
    return request(`${this.baseUrl}/api/analyses`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({
        species,
        max_papers: maxPapers,
        ...(strategy ? { strategy } : {}),
      }),
    });
  }

  getStatus(jobId: string): Promise<JobStatus> {
    return request(`${this.baseUrl}/api/analyses/${jobId}`);
  }

  getResults(jobId: string): Promise<AnalysisResults> {
    return request(`${this.baseUrl}/api/analyses/${jobId}/results`);
  }

  getSearchHistory(jobId: string): Promise<SearchHistory> {
    return request(`${this.baseUrl}/api/analyses/${jobId}/search-history`);
  }

  getToxicity(jobId: string): Promise<{ toxicity: ToxicityReport | null }> {
    return request(`${this.baseUrl}/api/analyses/${jobId}/toxicity`);
  }

  eventsUrl(jobId: string, lastEventId: number): string {
    const suffix = lastEventId > 0 ? `?last_event_id=${lastEventId}` : '';
    return `${this.baseUrl}/api/analyses/${jobId}/events${suffix}`;
  }
}
