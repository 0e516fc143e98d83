/**
 * Review-session state and its transitions.
 *
 * Everything here is pure: each transition returns a fresh state, so
 * the optimistic-update and rollback logic can be tested without a DOM
 * or a network.  Decision submissions are optimistic; the snapshot of
 * the untouched item rides along in `inFlight` until the service
 * answers, and at most one submission per document may be open.
 */

import type {
  ClassName,
  Interpretation,
  QueueFilters,
  QueueItem,
  QueuePage,
  Verdict,
} from "./types.js";

interface InFlight {
  docId: string;
  before: QueueItem;
}

export interface SessionState {
  run: string | null;
  queue: QueuePage | null;
  cursor: number;
  open: Interpretation | null;
  filters: QueueFilters;
  inFlight: InFlight[];
  error: string | null;
}

export function initialState(): SessionState {
  return {
    run: null,
    queue: null,
    cursor: 0,
    open: null,
    filters: {},
    inFlight: [],
    error: null,
  };
}

/** Confirm keeps the automatic class; override flips it. */
export function finalClassFor(predicted: ClassName, verdict: Verdict): ClassName {
  if (verdict === "confirm") return predicted;
  return predicted === "chapter" ? "rest" : "chapter";
}

export function withQueue(state: SessionState, queue: QueuePage): SessionState {
  const cursor = Math.min(state.cursor, Math.max(0, queue.items.length - 1));
  return { ...state, queue, cursor, error: null };
}

/** A failed fetch drops the queue so stale rows never render. */
export function withError(state: SessionState, message: string): SessionState {
  return { ...state, queue: null, error: message };
}

export function moveCursor(state: SessionState, delta: number): SessionState {
  if (state.queue === null || state.queue.items.length === 0) return state;
  const last = state.queue.items.length - 1;
  const cursor = Math.min(last, Math.max(0, state.cursor + delta));
  return { ...state, cursor };
}

function replaceItem(queue: QueuePage, item: QueueItem): QueuePage {
  return {
    ...queue,
    items: queue.items.map((it) => (it.doc_id === item.doc_id ? item : it)),
  };
}

/**
 * Start a decision submission: mark the item decided locally and record
 * the pre-submit snapshot for rollback.  Returns null when the document
 * already has a submission in flight or is not in the current page.
 */
export function beginSubmit(
  state: SessionState,
  docId: string,
  verdict: Verdict,
): SessionState | null {
  if (state.queue === null) return null;
  if (state.inFlight.some((f) => f.docId === docId)) return null;
  const item = state.queue.items.find((it) => it.doc_id === docId);
  if (item === undefined) return null;
  const finalClass = finalClassFor(item.predicted, verdict);
  const updated: QueueItem = { ...item, status: "decided", final_class: finalClass };
  const open =
    state.open !== null && state.open.doc_id === docId
      ? { ...state.open, status: "decided" as const, final_class: finalClass }
      : state.open;
  return {
    ...state,
    queue: replaceItem(state.queue, updated),
    open,
    inFlight: [...state.inFlight, { docId, before: item }],
    error: null,
  };
}

/** The service accepted the decision; keep the optimistic values. */
export function resolveSubmit(state: SessionState, docId: string): SessionState {
  return { ...state, inFlight: state.inFlight.filter((f) => f.docId !== docId) };
}

/** The service rejected the decision; restore the snapshot and report. */
export function rollbackSubmit(
  state: SessionState,
  docId: string,
  message: string,
): SessionState {
  const flight = state.inFlight.find((f) => f.docId === docId);
  if (flight === undefined) return state;
  const queue = state.queue === null ? null : replaceItem(state.queue, flight.before);
  const open =
    state.open !== null && state.open.doc_id === docId
      ? { ...state.open, status: flight.before.status, final_class: flight.before.final_class }
      : state.open;
  return {
    ...state,
    queue,
    open,
    inFlight: state.inFlight.filter((f) => f.docId !== docId),
    error: message,
  };
}
