/**
 * Pure HTML renderers for the two screens.
 *
 * Each function maps service payloads to a markup string and touches no
 * state, which keeps the views snapshot-testable.  Interactive elements
 * carry data-action attributes; the app module attaches one delegated
 * listener instead of wiring handlers here.
 */

import { escapeHtml, segmentText } from "./highlight.js";
import type {
  Band,
  Interpretation,
  QueueFilters,
  QueueItem,
  QueuePage,
  RunSummary,
} from "./types.js";

/** Sums, weights and band edges are decimal-scaled; drop float noise. */
export function formatNumber(x: number): string {
  return String(Number(x.toFixed(4)));
}

export function bandLabel(band: Band): string {
  return `(${formatNumber(band.lower)}, ${formatNumber(band.upper)})`;
}

function pct(x: number): string {
  return `${Math.round(x * 100)}%`;
}

export function renderLoading(): string {
  return `<p class="loading">loading...</p>`;
}

export function renderError(message: string): string {
  return [
    `<div class="banner error" role="alert">`,
    `<span>${escapeHtml(message)}</span>`,
    `<button data-action="retry">retry</button>`,
    `</div>`,
  ].join("");
}

export interface QueueViewProps {
  runs: RunSummary[];
  selectedRun: string | null;
  bands: Band[];
  queue: QueuePage | null;
  filters: QueueFilters;
  coder: string;
  error: string | null;
}

function renderRunSelector(runs: RunSummary[], selected: string | null): string {
  const options = runs.map((r) => {
    const sel = r.run_id === selected ? " selected" : "";
    const label = `${r.run_id} (${r.queue_size} to review, ${r.decided} decided)`;
    return `<option value="${escapeHtml(r.run_id)}"${sel}>${escapeHtml(label)}</option>`;
  });
  return `<select data-action="pick-run">${options.join("")}</select>`;
}

function renderBandChips(bands: Band[], active: number | undefined): string {
  const chips = bands.map((b) => {
    const classes = ["chip"];
    if (b.faulty) classes.push("faulty");
    if (b.index === active) classes.push("active");
    return [
      `<button class="${classes.join(" ")}" data-action="filter-band" data-band="${b.index}">`,
      `${bandLabel(b)} <span class="impurity">${pct(b.impurity)}</span>`,
      `</button>`,
    ].join("");
  });
  const allClasses = active === undefined ? "chip active" : "chip";
  chips.unshift(`<button class="${allClasses}" data-action="filter-band" data-band="">all bands</button>`);
  return `<nav class="band-chips">${chips.join("")}</nav>`;
}

function renderQueueRow(item: QueueItem, current: boolean): string {
  const status =
    item.status === "decided" && item.final_class !== null
      ? `decided: ${item.final_class}`
      : item.status;
  return [
    `<tr${current ? ` class="current"` : ""} data-action="open-doc" data-doc="${escapeHtml(item.doc_id)}">`,
    `<td class="doc-id">${escapeHtml(item.doc_id)}</td>`,
    `<td class="num">${formatNumber(item.sum)}</td>`,
    `<td>${bandLabel(item.band)}</td>`,
    `<td>${escapeHtml(item.predicted)}</td>`,
    `<td class="status ${item.status}">${escapeHtml(status)}</td>`,
    `</tr>`,
  ].join("");
}

function renderPager(queue: QueuePage): string {
  const pages = Math.max(1, Math.ceil(queue.total / queue.page_size));
  const prev = queue.page <= 1 ? " disabled" : "";
  const next = queue.page >= pages ? " disabled" : "";
  return [
    `<footer class="pager">`,
    `<button data-action="page-prev"${prev}>prev</button>`,
    `<span>page ${queue.page} of ${pages} (${queue.total} items)</span>`,
    `<button data-action="page-next"${next}>next</button>`,
    `</footer>`,
  ].join("");
}

/**
 * Queue screen: run selector, band filter chips with impurity badges,
 * and the paginated item table.  On error the table is suppressed
 * entirely so stale rows are never shown next to the banner.
 */
export function renderQueueView(props: QueueViewProps, cursor = -1): string {
  const parts = [`<div class="queue-view">`];
  parts.push(
    `<header class="toolbar">`,
    renderRunSelector(props.runs, props.selectedRun),
    `<input class="coder" data-action="coder" value="${escapeHtml(props.coder)}" placeholder="coder id">`,
    `</header>`,
  );
  parts.push(renderBandChips(props.bands, props.filters.band));
  if (props.error !== null) {
    parts.push(renderError(props.error));
  } else if (props.queue === null) {
    parts.push(renderLoading());
  } else if (props.queue.items.length === 0) {
    parts.push(`<p class="empty">nothing to review</p>`);
    parts.push(renderPager(props.queue));
  } else {
    parts.push(
      `<table class="queue">`,
      `<thead><tr><th>doc</th><th>sum</th><th>band</th><th>predicted</th><th>status</th></tr></thead>`,
      `<tbody>`,
      ...props.queue.items.map((item, i) => renderQueueRow(item, i === cursor)),
      `</tbody>`,
      `</table>`,
      renderPager(props.queue),
    );
  }
  parts.push(`</div>`);
  return parts.join("\n");
}

function renderSummaryText(doc: Interpretation): string {
  const weights = new Map(doc.matched.map((m) => [m.entity, m.weight]));
  const parts = segmentText(doc.text, doc.spans).map((seg) => {
    if (seg.span === null) return escapeHtml(seg.text);
    const weight = weights.get(seg.span.entity);
    if (weight === undefined) {
      throw new Error(`span entity "${seg.span.entity}" missing from the matched list`);
    }
    const tip = `${seg.span.entity} ${formatNumber(weight)}`;
    return (
      `<mark class="entity" title="${escapeHtml(tip)}" data-weight="${formatNumber(weight)}">` +
      `${escapeHtml(seg.text)}</mark>`
    );
  });
  return parts.join("");
}

/**
 * Summary screen: sum/band banner, the short-summary text with matched
 * entities highlighted (weight in the tooltip), and the verdict
 * controls.  A payload with overlapping or unmatched spans is rejected
 * and reported instead of being rendered half right.
 */
export function renderSummaryView(doc: Interpretation, busy = false): string {
  let body: string;
  try {
    body = renderSummaryText(doc);
  } catch (err) {
    return renderError(`cannot render ${doc.doc_id}: ${(err as Error).message}`);
  }
  const band = doc.band === null ? "none" : bandLabel(doc.band);
  const status =
    doc.status === "decided" && doc.final_class !== null
      ? `decided: ${doc.final_class}`
      : doc.status;
  const disabled = busy ? " disabled" : "";
  const matched = doc.matched.map(
    (m) => `<li>${escapeHtml(m.entity)} <span class="num">${formatNumber(m.weight)}</span></li>`,
  );
  return [
    `<div class="summary-view" data-doc="${escapeHtml(doc.doc_id)}">`,
    `<button data-action="back">back to queue</button>`,
    `<div class="banner">SUM ${formatNumber(doc.sum)}, band ${band}, predicted ${escapeHtml(doc.predicted)}</div>`,
    `<p class="status-line">doc ${escapeHtml(doc.doc_id)}: ${escapeHtml(status)}</p>`,
    `<p class="summary-text">${body}</p>`,
    `<ul class="matched">${matched.join("")}</ul>`,
    `<div class="controls">`,
    `<button class="confirm" data-action="confirm"${disabled}>confirm ${escapeHtml(doc.predicted)} [c]</button>`,
    `<button class="override" data-action="override"${disabled}>override [o]</button>`,
    `</div>`,
    `</div>`,
  ].join("\n");
}
