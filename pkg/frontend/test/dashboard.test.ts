import { describe, expect, it } from 'vitest';

import {
  escapeHtml,
  renderHistoryPanel,
  renderMetricCards,
  renderProgress,
  renderToxicityPanel,
} from '../src/dashboard.js';
import type { Consensus, SearchHistory, ToxicityReport } from '../src/types.js';

const CONSENSUS: Consensus = {
  protein_pct_dry_mass: { values: ['45'], support: 2 },
  trophic_mechanism: { values: ['heterotrophic'], support: 2 },
  reported_substrate: { values: ['glucose'], support: 2 },
  substrate_class: { values: ['sugar'], support: 2 },
};

describe('renderMetricCards', () => {
  it('renders values and paper counts verbatim from the payload', () => {
    const html = renderMetricCards(CONSENSUS);
    expect(html).toContain('<p class="metric-value">45</p>');
    expect(html).toContain('<p class="metric-value">heterotrophic</p>');
    expect(html).toContain('<p class="metric-value">glucose</p>');
    expect(html).toContain('<p class="metric-value">sugar</p>');
    expect(html.match(/2 papers/g)).toHaveLength(4);
    expect(html).toMatchSnapshot();
  });

  it('lists tied values joined without reordering them numerically', () => {
    const tied: Consensus = {
      ...CONSENSUS,
      protein_pct_dry_mass: { values: ['30', '45'], support: 1 },
    };
    const html = renderMetricCards(tied);
    expect(html).toContain('<p class="metric-value">30 / 45</p>');
    expect(html).toContain('1 paper<');
  });

  it('renders an explicit not-found state, never a blank card', () => {
    const absent: Consensus = {
      ...CONSENSUS,
      reported_substrate: { values: [], support: 0 },
    };
    const html = renderMetricCards(absent);
    expect(html).toContain('metric-card--empty');
    expect(html).toContain('<p class="metric-value">not found</p>');
    expect(html).not.toContain('<p class="metric-value"></p>');
  });

  it('escapes markup in field values', () => {
    const hostile: Consensus = {
      ...CONSENSUS,
      substrate_class: { values: ['<script>alert(1)</script>'], support: 1 },
    };
    const html = renderMetricCards(hostile);
    expect(html).not.toContain('<script>');
    expect(html).toContain('&lt;script&gt;');
  });
});

const TOXICITY: ToxicityReport = {
  organism_id: 'Fusarium venenatum',
  total_compounds: 3,
  with_cas: 2,
  unmatchable: 1,
  flagged: [
    { compound_id: 'CPD-FORM', name: 'formaldehyde', cas: '50-00-0', mutagenic: true },
  ],
  non_mutagenic_matches: [
    { compound_id: 'CPD-WATER', name: 'water', cas: '7732-18-5', mutagenic: false },
  ],
};

describe('renderToxicityPanel', () => {
  it('renders flagged compounds with their CAS numbers', () => {
    const html = renderToxicityPanel(TOXICITY);
    expect(html).toContain('50-00-0');
    expect(html).toContain('row-flagged');
    expect(html).toContain('1 of 3 compounds flagged.');
    expect(html).toContain('data-flagged="1" data-total="3"');
    expect(html).toMatchSnapshot();
  });

  it('states explicitly when nothing is flagged', () => {
    const clear = { ...TOXICITY, flagged: [] };
    expect(renderToxicityPanel(clear)).toContain('No mutagenic compounds flagged.');
  });

  it('handles missing screens and unknown organisms', () => {
    expect(renderToxicityPanel(null)).toContain('No toxicity screen was run.');
    expect(
      renderToxicityPanel({ organism_id: 'X y', unknown_organism: true }),
    ).toContain('not found in the pathway database');
  });
});

const HISTORY: SearchHistory = {
  entries: [
    { query: 'Fusarium venenatum', result_count: 3, error: null },
    { query: 'Fusarium venenatum growth', result_count: 0, error: 'HTTP 500' },
  ],
  fetch_outcomes: { fv001: true, fv002: false },
};

describe('renderHistoryPanel', () => {
  const papers = [
    { article_id: 'fv001', score: 6, record: { protein_pct_dry_mass: '45' } },
    { article_id: 'fv002', score: 4, error: 'fetch failed: HTTP 500' },
  ];

  it('marks failed queries and failed fetches visibly', () => {
    const html = renderHistoryPanel(HISTORY, papers);
    expect(html).toContain('query-row--failed');
    expect(html).toContain('failed: HTTP 500');
    expect(html).toContain('paper-row--failed');
    expect(html).toContain('fetch-failed');
    expect(html).toMatchSnapshot();
  });

  it('shows extraction success with the record in an expandable section', () => {
    const html = renderHistoryPanel(HISTORY, papers);
    expect(html).toContain('<details');
    expect(html).toContain('fv001 (score 6) — extracted');
    expect(html).toContain('&quot;protein_pct_dry_mass&quot;: &quot;45&quot;');
  });
});

describe('renderProgress', () => {
  it('marks reached and active steps in event order', () => {
    const html = renderProgress(['queued', 'searching', 'extracting']);
    expect(html).toContain('progress-step--active">extracting');
    expect((html.match(/progress-step--reached/g) ?? []).length).toBe(3);
  });

  it('appends a failed step when the job fails', () => {
    const html = renderProgress(['queued', 'searching', 'failed']);
    expect(html).toContain('progress--failed');
    expect(html).toContain('progress-step--failed">failed');
  });
});

describe('escapeHtml', () => {
  it('escapes the four risky characters', () => {
    expect(escapeHtml('<a href="x">&</a>')).toBe('&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;');
  });
});
