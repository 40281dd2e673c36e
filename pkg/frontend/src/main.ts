/** Browser entry point: configure -> progress -> results, one page. */

import { AnalysisApi, ApiError } from './api.js';
import { renderProgress, renderResults } from './dashboard.js';
import { describeSubmitError, validateLaunchForm } from './form.js';
import { consumeEventStream, fetchConnector } from './sse.js';
import type { JobState } from './types.js';

const api = new AnalysisApi();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function launch(): Promise<void> {
  const species = el<HTMLInputElement>('species').value;
  const maxPapers = Number(el<HTMLInputElement>('max-papers').value);
  const errorBox = el<HTMLElement>('form-errors');
  errorBox.textContent = '';

  const validation = validateLaunchForm({ species, maxPapers });
  if (!validation.ok) {
    errorBox.textContent = Object.values(validation.errors).join(' ');
    return;
  }

  let jobId: string;
  try {
    const created = await api.createAnalysis(species.trim(), maxPapers);
    jobId = created.job_id;
  } catch (err) {
    errorBox.textContent =
      err instanceof ApiError ? describeSubmitError(err.status, err.detail) : String(err);
    return;
  }

  const progressBox = el<HTMLElement>('progress');
  const resultsBox = el<HTMLElement>('results');
  resultsBox.innerHTML = '';
  const statesSeen: JobState[] = [];

  await consumeEventStream(
    fetchConnector((lastEventId) => api.eventsUrl(jobId, lastEventId)),
    (ev) => {
      if (ev.event === 'state') {
        statesSeen.push(ev.data.state as JobState);
        progressBox.innerHTML = renderProgress(statesSeen);
      }
    },
  );

  if (statesSeen[statesSeen.length - 1] === 'done') {
    const results = await api.getResults(jobId);
    resultsBox.innerHTML = renderResults(results);
  } else {
    const status = await api.getStatus(jobId);
    resultsBox.innerHTML = `<p class="job-failed">Analysis failed: ${status.message}</p>`;
  }
}

el<HTMLButtonElement>('launch').addEventListener('click', () => {
  void launch();
});
