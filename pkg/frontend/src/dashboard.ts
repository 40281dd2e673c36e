/**
 * Pure rendering for the results dashboard.
 *
 * Every function maps an API payload to an HTML string with no computation on
 * the scientific values: numbers and field values appear byte-for-byte as the
 * server sent them, which the snapshot tests rely on.
 */

import {
  METRIC_FIELDS,
  STATE_SEQUENCE,
  type AnalysisResults,
  type Consensus,
  type JobState,
  type PaperOutcome,
  type SearchHistory,
  type ToxicityReport,
} from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function paperCountLabel(support: number): string {
  return support === 1 ? '1 paper' : `${support} papers`;
}

/** Four colour-coded metric cards, one per extracted field. */
export function renderMetricCards(consensus: Consensus): string {
  const cards = METRIC_FIELDS.map(({ key, label }) => {
    const field = consensus[key];
    if (!field || field.values.length === 0) {
      return (
        `<div class="metric-card metric-card--empty" data-field="${key}">` +
        `<h3>${escapeHtml(label)}</h3>` +
        `<p class="metric-value">not found</p>` +
        `<p class="metric-support">0 papers</p>` +
        `</div>`
      );
    }
    const value = field.values.map(escapeHtml).join(' / ');
    return (
      `<div class="metric-card" data-field="${key}">` +
      `<h3>${escapeHtml(label)}</h3>` +
      `<p class="metric-value">${value}</p>` +
      `<p class="metric-support">${paperCountLabel(field.support)}</p>` +
      `</div>`
    );
  });
  return `<section class="metric-cards">${cards.join('')}</section>`;
}

/** Sortable-table markup plus a flagged/total proportion bar. */
export function renderToxicityPanel(
  toxicity: ToxicityReport | { organism_id: string; unknown_organism: true } | null,
): string {
  if (toxicity === null) {
    return '<section class="toxicity-panel"><p>No toxicity screen was run.</p></section>';
  }
  if ('unknown_organism' in toxicity) {
    return (
      `<section class="toxicity-panel"><p>Organism ` +
      `${escapeHtml(toxicity.organism_id)} not found in the pathway database.</p></section>`
    );
  }
  const rows = [...toxicity.flagged, ...toxicity.non_mutagenic_matches]
    .map(
      (m) =>
        `<tr class="${m.mutagenic ? 'row-flagged' : 'row-clear'}">` +
        `<td>${escapeHtml(m.compound_id)}</td>` +
        `<td>${escapeHtml(m.name)}</td>` +
        `<td>${escapeHtml(m.cas)}</td>` +
        `<td>${m.mutagenic ? 'mutagenic' : 'clear'}</td>` +
        `</tr>`,
    )
    .join('');
  const flaggedCount = toxicity.flagged.length;
  const summary =
    flaggedCount === 0
      ? '<p class="toxicity-summary">No mutagenic compounds flagged.</p>'
      : `<p class="toxicity-summary">${flaggedCount} of ${toxicity.total_compounds} compounds flagged.</p>`;
  return (
    `<section class="toxicity-panel">` +
    summary +
    `<div class="proportion-bar" data-flagged="${flaggedCount}" data-total="${toxicity.total_compounds}"></div>` +
    `<table class="toxicity-table"><thead><tr>` +
    `<th>Compound</th><th>Name</th><th>CAS</th><th>Status</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>` +
    `<p class="toxicity-footnote">${toxicity.unmatchable} compounds had no usable CAS number.</p>` +
    `</section>`
  );
}

/** Search optimisation history: every query plus per-paper fetch outcomes. */
export function renderHistoryPanel(history: SearchHistory, papers: PaperOutcome[]): string {
  const queryRows = history.entries
    .map((entry) => {
      const failed = Boolean(entry.error);
      const status = failed
        ? `<span class="query-failed">failed: ${escapeHtml(entry.error ?? '')}</span>`
        : `${entry.result_count} results`;
      return (
        `<li class="query-row${failed ? ' query-row--failed' : ''}">` +
        `<code>${escapeHtml(entry.query)}</code> — ${status}</li>`
      );
    })
    .join('');

  const paperRows = papers
    .map((paper) => {
      const fetched = history.fetch_outcomes[paper.article_id];
      const fetchFailed = fetched === false;
      let outcome: string;
      if (fetchFailed) outcome = '<span class="fetch-failed">fetch failed</span>';
      else if (paper.error) outcome = `<span class="fetch-failed">${escapeHtml(paper.error)}</span>`;
      else if (paper.negative) outcome = 'no relevant information';
      else if (paper.record) outcome = 'extracted';
      else outcome = 'pending';
      return (
        `<details class="paper-row${fetchFailed || paper.error ? ' paper-row--failed' : ''}">` +
        `<summary>${escapeHtml(paper.article_id)} (score ${paper.score}) — ${outcome}</summary>` +
        (paper.record
          ? `<pre>${escapeHtml(JSON.stringify(paper.record, null, 2))}</pre>`
          : '') +
        `</details>`
      );
    })
    .join('');

  return (
    `<section class="history-panel">` +
    `<h2>Search Optimisation History</h2>` +
    `<ul class="query-list">${queryRows}</ul>` +
    `<div class="paper-list">${paperRows}</div>` +
    `</section>`
  );
}

/** Stepwise progress indicator driven purely by received state events. */
export function renderProgress(statesSeen: JobState[]): string {
  const current = statesSeen[statesSeen.length - 1];
  const failed = current === 'failed';
  const steps = STATE_SEQUENCE.map((state) => {
    const reached = statesSeen.includes(state);
    const active = state === current;
    const classes = ['progress-step'];
    if (reached) classes.push('progress-step--reached');
    if (active) classes.push('progress-step--active');
    return `<li class="${classes.join(' ')}">${state}</li>`;
  });
  return (
    `<ol class="progress${failed ? ' progress--failed' : ''}">` +
    steps.join('') +
    (failed ? '<li class="progress-step progress-step--failed">failed</li>' : '') +
    `</ol>`
  );
}

export function renderResults(results: AnalysisResults): string {
  return (
    `<h1>${escapeHtml(results.species)}</h1>` +
    renderMetricCards(results.consensus) +
    renderToxicityPanel(results.toxicity) +
    renderHistoryPanel(results.search_history, results.papers)
  );
}
