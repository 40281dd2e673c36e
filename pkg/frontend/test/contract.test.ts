/**
 * Contract test against a live fixture-backed service instance.
 *
 * Spawns the Python service with offline fixture providers, runs a full
 * analysis job over HTTP, and checks that the rendered dashboard shows the
 * API payload byte-for-byte and that the progress sequence matches the
 * emitted event order.
 */

import { spawn, type ChildProcess } from 'node:child_process';
import { fileURLToPath } from 'node:url';
import { dirname, join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { AnalysisApi } from '../src/api.js';
import { renderHistoryPanel, renderMetricCards, renderProgress, renderResults } from '../src/dashboard.js';
import { consumeEventStream, fetchConnector } from '../src/sse.js';
import type { AnalysisResults, JobState } from '../src/types.js';
import { METRIC_FIELDS } from '../src/types.js';

const PORT = 20000 + Math.floor(Math.random() * 20000);
const BASE = `http://127.0.0.1:${PORT}`;
const SERVER_SCRIPT = join(dirname(fileURLToPath(import.meta.url)), 'fixture_server.py');

let server: ChildProcess;
const api = new AnalysisApi(BASE);

async function waitForHealthy(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) return;
    } catch {
      // server not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error('fixture server did not become healthy');
}

beforeAll(async () => {
  server = spawn('python3', [SERVER_SCRIPT, String(PORT)], { stdio: 'inherit' });
  await waitForHealthy();
}, 40_000);

afterAll(() => {
  server?.kill();
});

describe('dashboard against the fixture server', () => {
  let results: AnalysisResults;
  let statesSeen: JobState[];

  beforeAll(async () => {
    const created = await api.createAnalysis('Fusarium venenatum', 5);
    statesSeen = [];
    await consumeEventStream(
      fetchConnector((lastEventId) => api.eventsUrl(created.job_id, lastEventId)),
      (ev) => {
        if (ev.event === 'state') statesSeen.push(ev.data.state as JobState);
      },
    );
    results = await api.getResults(created.job_id);
  }, 30_000);

  it('renders four metric cards byte-equal to the API payload', () => {
    const html = renderMetricCards(results.consensus);
    expect((html.match(/metric-card/g) ?? []).length).toBeGreaterThanOrEqual(4);
    for (const { key } of METRIC_FIELDS) {
      const field = results.consensus[key];
      expect(field).toBeDefined();
      const rendered = field!.values.join(' / ');
      expect(html).toContain(`<p class="metric-value">${rendered}</p>`);
      const papers = field!.support === 1 ? '1 paper' : `${field!.support} papers`;
      expect(html).toContain(`<p class="metric-support">${papers}</p>`);
    }
  });

  it('marks the unfetchable article as failed in the history panel', () => {
    const html = renderHistoryPanel(results.search_history, results.papers);
    expect(results.search_history.fetch_outcomes['fv004']).toBe(false);
    expect(html).toContain('fv004');
    expect(html).toContain('paper-row--failed');
    expect(html).toContain('fetch-failed');
  });

  it('progress sequence equals the emitted event order', () => {
    expect(statesSeen).toEqual(['queued', 'searching', 'extracting', 'screening', 'done']);
    const html = renderProgress(statesSeen);
    expect(html).toContain('progress-step--active">done');
    expect((html.match(/progress-step--reached/g) ?? []).length).toBe(5);
  });

  it('renders the toxicity screen from the live payload', () => {
    const full = renderResults(results);
    expect(full).toContain('50-00-0');
    expect(full).toContain('row-flagged');
    expect(full).toMatchSnapshot();
  });
});
