import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient, type FetchLike } from "../src/api.js";
import { StateStore, type Scheduler } from "../src/state.js";
import { FakeServer, unreachableFetch } from "./fake_server.js";

const CONFLICT =
  "stage 'screenplay' of run 'r-1' is 'approved', not awaiting approval";

function makeStore(fetchImpl: FetchLike): StateStore {
  return new StateStore(new ApiClient({ fetchImpl }));
}

/** Fetch whose target can be swapped mid-test, for outage simulation. */
function switchable(initial: FetchLike): {
  fetchImpl: FetchLike;
  use(next: FetchLike): void;
} {
  let target = initial;
  return {
    fetchImpl: (input, init) => target(input, init),
    use(next) {
      target = next;
    },
  };
}

const flush = () => new Promise((resolve) => setTimeout(resolve, 0));

describe("reads", () => {
  let server: FakeServer;
  let store: StateStore;

  beforeEach(() => {
    server = new FakeServer();
    server.seed("r-1");
    server.seed("r-2", { shots: 2, genre: "comedy" });
    store = makeStore(server.fetch);
  });

  it("refreshRuns loads the listing", async () => {
    await store.refreshRuns();
    expect(store.state.runs.map((r) => r.run_id)).toEqual(["r-1", "r-2"]);
    expect(store.state.online).toBe(true);
  });

  it("open loads one run's detail", async () => {
    await store.open("r-1");
    expect(store.state.selected?.run_id).toBe("r-1");
    expect(store.state.selected?.awaiting).toBe("screenplay");
  });

  it("filters flow into the listing query", async () => {
    await store.setFilter({ gate: "awaiting_approval" });
    expect(store.state.runs).toHaveLength(2);
    await store.setFilter({ stage: "final" });
    expect(store.state.runs).toHaveLength(0);
    const paths = server.calls.map((c) => c.path);
    expect(paths).toContain("/api/runs?gate=awaiting_approval");
    expect(paths).toContain("/api/runs?stage=final");
  });

  it("subscribers hear patches until they detach", async () => {
    let heard = 0;
    const stop = store.subscribe(() => {
      heard += 1;
    });
    await store.refreshRuns();
    expect(heard).toBe(1);
    stop();
    await store.refreshRuns();
    expect(heard).toBe(1);
  });
});

describe("mutations keep server truth", () => {
  let server: FakeServer;
  let store: StateStore;

  beforeEach(async () => {
    server = new FakeServer();
    server.seed("r-1");
    store = makeStore(server.fetch);
    await store.open("r-1");
    await store.refreshRuns();
  });

  it("approve stores the record the server returned", async () => {
    await store.approve("r-1", "screenplay");
    expect(store.state.selected?.awaiting).toBe("storyboard");
    expect(store.state.selected?.keyframe_refs).toHaveLength(4);
    expect(store.state.notice).toBeNull();
    expect(store.state.runs[0]?.stage).toBe("storyboard");
  });

  it("a conflict surfaces the refusal verbatim and reloads truth", async () => {
    await store.approve("r-1", "screenplay");
    await store.approve("r-1", "screenplay");
    expect(store.state.notice).toBe(CONFLICT);
    expect(store.state.selected?.gate_states["screenplay"]).toBe("approved");
    expect(store.state.selected?.awaiting).toBe("storyboard");
  });

  it("an edited scenario replaces the document and continues", async () => {
    await store.rejectWithEdit("r-1", "the storm arrives early");
    const selected = store.state.selected!;
    expect(selected.artifacts.screenplay!.screenplay.scene.scenario).toBe(
      "the storm arrives early",
    );
    expect(selected.rendered_screenplay).toContain("the storm arrives early");
    expect(selected.gate_states["screenplay"]).toBe("approved");
    expect(selected.awaiting).toBe("storyboard");
    expect(server.peek("r-1").artifacts.screenplay!.screenplay.scene.scenario).toBe(
      "the storm arrives early",
    );
  });

  it("a blank edit is refused and the gate survives", async () => {
    await store.rejectWithEdit("r-1", "   ");
    expect(store.state.notice).toBe("field scenario must be non-empty text");
    expect(store.state.selected?.awaiting).toBe("screenplay");
  });

  it("a plain reject parks the run", async () => {
    await store.rejectHold("r-1", "screenplay");
    expect(store.state.selected?.gate_states["screenplay"]).toBe("rejected");
    expect(store.state.selected?.awaiting).toBeNull();
  });

  it("reject-regenerate re-arms the gate on a fresh revision", async () => {
    await store.approve("r-1", "screenplay");
    await store.rejectRegenerate("r-1", "storyboard");
    const selected = store.state.selected!;
    expect(selected.revision).toBe(1);
    expect(selected.awaiting).toBe("storyboard");
    expect(selected.keyframe_refs[0]).toBe("kf-r-1-r1-0");
  });

  it("never mutates local state when the API is unreachable", async () => {
    const link = switchable(server.fetch);
    const offlineStore = makeStore(link.fetchImpl);
    await offlineStore.open("r-1");
    link.use(unreachableFetch);
    await offlineStore.approve("r-1", "screenplay");
    expect(offlineStore.state.online).toBe(false);
    expect(offlineStore.state.notice).toBeNull();
    expect(offlineStore.state.selected?.awaiting).toBe("screenplay");
    link.use(server.fetch);
    await offlineStore.approve("r-1", "screenplay");
    expect(offlineStore.state.online).toBe(true);
    expect(offlineStore.state.selected?.awaiting).toBe("storyboard");
  });
});

describe("connectivity and polling", () => {
  it("flags the outage and recovers on the next good read", async () => {
    const server = new FakeServer();
    server.seed("r-1");
    const link = switchable(unreachableFetch);
    const store = makeStore(link.fetchImpl);
    await store.refreshRuns();
    expect(store.state.online).toBe(false);
    link.use(server.fetch);
    await store.refreshRuns();
    expect(store.state.online).toBe(true);
    expect(store.state.runs).toHaveLength(1);
  });

  it("polling refreshes the view until stopped", async () => {
    const server = new FakeServer();
    const store = makeStore(server.fetch);
    let tick: (() => void) | null = null;
    let interval = 0;
    const scheduler: Scheduler = (callback, everyMs) => {
      tick = callback;
      interval = everyMs;
      return () => {
        tick = null;
      };
    };
    const stop = store.startPolling(4000, scheduler);
    expect(interval).toBe(4000);
    server.seed("r-late");
    tick!();
    await flush();
    expect(store.state.runs.map((r) => r.run_id)).toEqual(["r-late"]);
    stop();
    expect(tick).toBeNull();
  });
});
