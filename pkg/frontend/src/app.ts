/**
 * DOM glue: fetch, render, and the keyboard-first review flow.
 *
 * All rendering and state transitions live in pure modules; this file
 * only moves data between the service client, the session state, and
 * the root element.  Keys: j/k or arrows move the cursor, enter opens
 * the summary, c confirms, o overrides, escape returns to the queue.
 */

import { ApiError, ReviewApi } from "./api.js";
import {
  beginSubmit,
  initialState,
  moveCursor,
  resolveSubmit,
  rollbackSubmit,
  withError,
  withQueue,
  type SessionState,
} from "./state.js";
import { renderQueueView, renderSummaryView } from "./views.js";
import type { Band, RunSummary, Verdict } from "./types.js";

const CODER_KEY = "chaptercoder_coder_id";

function storedCoder(): string {
  try {
    return localStorage.getItem(CODER_KEY) ?? "coder";
  } catch {
    return "coder";
  }
}

export function mountApp(root: HTMLElement, api: ReviewApi): { refresh(): Promise<void> } {
  let state: SessionState = initialState();
  let runs: RunSummary[] = [];
  let bands: Band[] = [];
  let coder = storedCoder();

  function render(): void {
    if (state.open !== null) {
      const busy = state.inFlight.some((f) => f.docId === state.open!.doc_id);
      root.innerHTML = renderSummaryView(state.open, busy);
    } else {
      root.innerHTML = renderQueueView(
        {
          runs,
          selectedRun: state.run,
          bands,
          queue: state.queue,
          filters: state.filters,
          coder,
          error: state.error,
        },
        state.cursor,
      );
    }
  }

  function describe(err: unknown): string {
    return err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  }

  async function loadQueue(): Promise<void> {
    if (state.run === null) return;
    try {
      const [bandList, queue] = await Promise.all([
        api.getBands(state.run),
        api.getQueue(state.run, state.filters),
      ]);
      bands = bandList;
      state = withQueue(state, queue);
    } catch (err) {
      state = withError(state, describe(err));
    }
    render();
  }

  async function refresh(): Promise<void> {
    try {
      runs = await api.listRuns();
      if (state.run === null && runs.length > 0) {
        state = { ...state, run: runs[0].run_id };
      }
    } catch (err) {
      state = withError(state, describe(err));
      render();
      return;
    }
    await loadQueue();
  }

  async function openDoc(docId: string): Promise<void> {
    try {
      const doc = await api.getInterpretation(state.run ?? "", docId);
      state = { ...state, open: doc, error: null };
    } catch (err) {
      state = withError(state, describe(err));
    }
    render();
  }

  async function submit(verdict: Verdict): Promise<void> {
    const docId = state.open?.doc_id ?? state.queue?.items[state.cursor]?.doc_id;
    const run = state.run;
    if (docId === undefined || run === null) return;
    const begun = beginSubmit(state, docId, verdict);
    if (begun === null) return;
    state = begun;
    render();
    try {
      await api.submitDecision(run, docId, verdict, coder);
      state = resolveSubmit(state, docId);
      await loadQueue();
    } catch (err) {
      state = rollbackSubmit(state, docId, describe(err));
      render();
    }
  }

  function setFilters(patch: Record<string, unknown>): void {
    state = { ...state, filters: { ...state.filters, ...patch }, cursor: 0 };
    void loadQueue();
  }

  function onClick(event: Event): void {
    const el = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (el === null) return;
    switch (el.dataset.action) {
      case "open-doc":
        void openDoc(el.dataset.doc ?? "");
        break;
      case "filter-band": {
        const raw = el.dataset.band ?? "";
        setFilters({ band: raw === "" ? undefined : Number(raw), page: undefined });
        break;
      }
      case "page-prev":
        setFilters({ page: Math.max(1, (state.queue?.page ?? 1) - 1) });
        break;
      case "page-next":
        setFilters({ page: (state.queue?.page ?? 1) + 1 });
        break;
      case "back":
        state = { ...state, open: null };
        void loadQueue();
        break;
      case "confirm":
        void submit("confirm");
        break;
      case "override":
        void submit("override");
        break;
      case "retry":
        void refresh();
        break;
    }
  }

  function onChange(event: Event): void {
    const el = event.target as HTMLElement;
    if (el.dataset.action === "pick-run") {
      state = { ...initialState(), run: (el as HTMLSelectElement).value };
      void loadQueue();
    } else if (el.dataset.action === "coder") {
      coder = (el as HTMLInputElement).value.trim() || "coder";
      try {
        localStorage.setItem(CODER_KEY, coder);
      } catch {
        // storage may be unavailable; the in-memory value still applies
      }
    }
  }

  function onKey(event: KeyboardEvent): void {
    const tag = (event.target as HTMLElement).tagName;
    if (tag === "INPUT" || tag === "SELECT" || tag === "TEXTAREA") return;
    switch (event.key) {
      case "j":
      case "ArrowDown":
        state = moveCursor(state, 1);
        render();
        break;
      case "k":
      case "ArrowUp":
        state = moveCursor(state, -1);
        render();
        break;
      case "Enter": {
        const docId = state.queue?.items[state.cursor]?.doc_id;
        if (state.open === null && docId !== undefined) void openDoc(docId);
        break;
      }
      case "Escape":
        if (state.open !== null) {
          state = { ...state, open: null };
          void loadQueue();
        }
        break;
      case "c":
        void submit("confirm");
        break;
      case "o":
        void submit("override");
        break;
    }
  }

  root.addEventListener("click", onClick);
  root.addEventListener("change", onChange);
  document.addEventListener("keydown", onKey);
  void refresh();
  return { refresh };
}
