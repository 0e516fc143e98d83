/**
 * JSON payload shapes published by the review service.
 *
 * The UI never computes scores or classes itself, so these mirror the
 * service responses field for field; any number shown on screen comes
 * straight out of one of these objects.
 */

export type ClassName = "chapter" | "rest";

export type DocStatus = "pending" | "decided";

export type Verdict = "confirm" | "override";

export interface Band {
  index: number;
  lower: number;
  upper: number;
  count_chapter: number;
  count_rest: number;
  share: number;
  impurity: number;
  orientation: "above" | "below";
  faulty: boolean;
}

export interface RunSummary {
  run_id: string;
  tau: number;
  docs: number;
  bands: number;
  faulty_bands: number;
  queue_size: number;
  decided: number;
}

export interface QueueItem {
  doc_id: string;
  sum: number;
  band: Band;
  predicted: ClassName;
  status: DocStatus;
  final_class: ClassName | null;
}

export interface QueuePage {
  run_id: string;
  page: number;
  page_size: number;
  total: number;
  items: QueueItem[];
}

export interface MatchedEntity {
  entity: string;
  weight: number;
}

/** Character offsets into Interpretation.text; spans never overlap. */
export interface EntitySpan {
  entity: string;
  start: number;
  end: number;
}

export interface Interpretation {
  doc_id: string;
  text: string;
  sum: number;
  predicted: ClassName;
  band: Band | null;
  flagged_for_review: boolean;
  status: DocStatus;
  final_class: ClassName | null;
  matched: MatchedEntity[];
  spans: EntitySpan[];
}

export interface DecisionResponse {
  doc_id: string;
  verdict: Verdict;
  final_class: ClassName;
  coder: string;
  seq: number;
  superseded: boolean;
}

/** Every non-2xx service response carries this body. */
export interface ApiErrorBody {
  code: string;
  message: string;
}

export interface QueueFilters {
  status?: DocStatus;
  band?: number;
  page?: number;
}
