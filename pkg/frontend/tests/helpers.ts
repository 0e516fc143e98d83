/** Recorded service responses shared by the test modules. */

import { readFileSync } from "node:fs";

import type {
  Band,
  DecisionResponse,
  Interpretation,
  QueuePage,
  RunSummary,
} from "../src/types.js";

export interface Fixtures {
  runs: RunSummary[];
  bands: Band[];
  queue_page1: QueuePage;
  queue_page2: QueuePage;
  queue_empty: QueuePage;
  queue_band4: QueuePage;
  queue_after_decision: QueuePage;
  interpretation: Interpretation;
  decision_response: DecisionResponse;
}

export function loadFixtures(): Fixtures {
  const url = new URL("./fixtures/api.json", import.meta.url);
  return JSON.parse(readFileSync(url, "utf8")) as Fixtures;
}
