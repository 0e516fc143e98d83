import { describe, expect, it } from "vitest";

import {
  beginSubmit,
  finalClassFor,
  initialState,
  moveCursor,
  resolveSubmit,
  rollbackSubmit,
  withError,
  withQueue,
  type SessionState,
} from "../src/state.js";
import { loadFixtures } from "./helpers.js";

const fx = loadFixtures();

function loaded(): SessionState {
  return withQueue({ ...initialState(), run: "r1" }, fx.queue_page1);
}

describe("finalClassFor", () => {
  it("keeps the predicted class on confirm and flips it on override", () => {
    expect(finalClassFor("chapter", "confirm")).toBe("chapter");
    expect(finalClassFor("rest", "confirm")).toBe("rest");
    expect(finalClassFor("chapter", "override")).toBe("rest");
    expect(finalClassFor("rest", "override")).toBe("chapter");
  });
});

describe("optimistic decision submission", () => {
  it("marks the item decided locally and keeps a rollback snapshot", () => {
    const state = loaded();
    const original = state.queue!.items[0];
    expect(original.status).toBe("pending");

    const begun = beginSubmit(state, original.doc_id, "confirm");
    expect(begun).not.toBeNull();
    const updated = begun!.queue!.items.find((it) => it.doc_id === original.doc_id)!;
    expect(updated.status).toBe("decided");
    expect(updated.final_class).toBe(original.predicted);
    expect(begun!.inFlight).toHaveLength(1);
  });

  it("allows at most one in-flight submission per document", () => {
    const state = loaded();
    const first = beginSubmit(state, "100201", "confirm")!;
    expect(beginSubmit(first, "100201", "override")).toBeNull();
    // a different document is not blocked
    expect(beginSubmit(first, "100108", "override")).not.toBeNull();
  });

  it("ignores documents outside the current page", () => {
    expect(beginSubmit(loaded(), "999999", "confirm")).toBeNull();
  });

  it("rollback restores the exact pre-submit item and reports the error", () => {
    const state = loaded();
    const original = state.queue!.items[0];
    const begun = beginSubmit(state, original.doc_id, "override")!;
    const rolled = rollbackSubmit(begun, original.doc_id, "server 500");
    expect(rolled.queue!.items.find((it) => it.doc_id === original.doc_id)).toEqual(original);
    expect(rolled.error).toBe("server 500");
    expect(rolled.inFlight).toHaveLength(0);
  });

  it("resolve keeps the decided row and clears the in-flight marker", () => {
    const state = loaded();
    const begun = beginSubmit(state, "100201", "confirm")!;
    const done = resolveSubmit(begun, "100201");
    expect(done.inFlight).toHaveLength(0);
    expect(done.queue!.items[0].status).toBe("decided");
  });

  it("updates and rolls back the open summary alongside the queue row", () => {
    const state: SessionState = { ...loaded(), open: fx.interpretation };
    const begun = beginSubmit(state, fx.interpretation.doc_id, "override")!;
    expect(begun.open!.status).toBe("decided");
    expect(begun.open!.final_class).toBe("rest");
    const rolled = rollbackSubmit(begun, fx.interpretation.doc_id, "boom");
    expect(rolled.open!.status).toBe("pending");
    expect(rolled.open!.final_class).toBeNull();
  });
});

describe("queue navigation", () => {
  it("clamps the cursor to the item list", () => {
    let state = loaded();
    expect(state.queue!.items).toHaveLength(2);
    state = moveCursor(state, -5);
    expect(state.cursor).toBe(0);
    state = moveCursor(state, 1);
    expect(state.cursor).toBe(1);
    state = moveCursor(state, 10);
    expect(state.cursor).toBe(1);
  });

  it("does nothing on an empty queue", () => {
    const state = withQueue(initialState(), fx.queue_empty);
    expect(moveCursor(state, 1).cursor).toBe(0);
  });

  it("pulls the cursor back when a shorter page arrives", () => {
    const state = { ...loaded(), cursor: 1 };
    expect(withQueue(state, fx.queue_page2).cursor).toBe(0);
  });
});

describe("withError", () => {
  it("drops the queue so stale rows never render", () => {
    const state = withError(loaded(), "service unreachable");
    expect(state.queue).toBeNull();
    expect(state.error).toBe("service unreachable");
  });

  it("a successful fetch clears the error again", () => {
    const state = withQueue(withError(loaded(), "boom"), fx.queue_page1);
    expect(state.error).toBeNull();
    expect(state.queue).toEqual(fx.queue_page1);
  });
});
