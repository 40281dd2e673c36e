/**
 * Mirrors of the analysis service's JSON contract.
 *
 * Every scientific value rendered by the UI is received verbatim from these
 * payloads; the client never recomputes or aggregates them.
 */

export type JobState =
  | 'queued'
  | 'searching'
  | 'extracting'
  | 'screening'
  | 'done'
  | 'failed';

export const STATE_SEQUENCE: JobState[] = [
  'queued',
  'searching',
  'extracting',
  'screening',
  'done',
];

export interface JobStatus {
  job_id: string;
  species: string;
  max_papers: number;
  strategy: string;
  state: JobState;
  message: string;
  counts: Record<string, number>;
}

export interface ConsensusField {
  values: string[];
  support: number;
}

export type Consensus = Record<string, ConsensusField>;

export interface PaperOutcome {
  article_id: string;
  score: number;
  source?: string;
  record?: Record<string, string>;
  negative?: boolean;
  error?: string;
}

export interface ToxicityMatch {
  compound_id: string;
  name: string;
  cas: string;
  mutagenic: boolean;
}

export interface ToxicityReport {
  organism_id: string;
  total_compounds: number;
  with_cas: number;
  unmatchable: number;
  flagged: ToxicityMatch[];
  non_mutagenic_matches: ToxicityMatch[];
}

export interface QueryLogEntry {
  query: string;
  result_count: number;
  error?: string | null;
  relevant_ids?: string[];
}

export interface SearchHistory {
  entries: QueryLogEntry[];
  fetch_outcomes: Record<string, boolean>;
}

export interface AnalysisResults {
  species: string;
  max_papers: number;
  strategy: string;
  consensus: Consensus;
  papers: PaperOutcome[];
  toxicity: ToxicityReport | { organism_id: string; unknown_organism: true } | null;
  search_history: SearchHistory;
}

/** Field order for the four metric cards, matching the extraction schema. */
export const METRIC_FIELDS: Array<{ key: string; label: string }> = [
  { key: 'protein_pct_dry_mass', label: 'Protein % dry mass' },
  { key: 'trophic_mechanism', label: 'Trophic mechanism' },
  { key: 'reported_substrate', label: 'Reported substrate' },
  { key: 'substrate_class', label: 'Substrate class' },
];
