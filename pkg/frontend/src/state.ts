/** Application state: a projection of server documents plus connectivity.
 *
 * Nothing in here edits a run locally. Mutations call the API and store
 * whatever record the server hands back; a failed mutation triggers a
 * refetch so the view snaps back to server truth. Connectivity loss is
 * a banner flag, never a state rollback.
 */

import { ApiClient, ApiError, type RunFilter } from "./api.js";
import type { RunDetail, RunSummary } from "./types.js";

export interface AppState {
  online: boolean;
  notice: string | null;
  runs: RunSummary[];
  filter: RunFilter;
  selected: RunDetail | null;
}

export type Scheduler = (callback: () => void, everyMs: number) => () => void;

const intervalScheduler: Scheduler = (callback, everyMs) => {
  const handle = setInterval(callback, everyMs);
  return () => clearInterval(handle);
};

export class StateStore {
  state: AppState = {
    online: true,
    notice: null,
    runs: [],
    filter: {},
    selected: null,
  };

  private listeners: Array<(state: AppState) => void> = [];

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: (state: AppState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private patch(partial: Partial<AppState>): void {
    this.state = { ...this.state, ...partial };
    for (const listener of this.listeners) listener(this.state);
  }

  async refreshRuns(): Promise<void> {
    try {
      const page = await this.api.listRuns(this.state.filter);
      this.patch({ runs: page.runs, online: true });
    } catch (err) {
      this.fail(err);
    }
  }

  async setFilter(filter: RunFilter): Promise<void> {
    this.patch({ filter });
    await this.refreshRuns();
  }

  async open(runId: string): Promise<void> {
    try {
      const detail = await this.api.run(runId);
      this.patch({ selected: detail, online: true });
    } catch (err) {
      this.fail(err);
    }
  }

  close(): void {
    this.patch({ selected: null, notice: null });
  }

  /** Refetch whatever is on screen; the polling tick. */
  async refresh(): Promise<void> {
    await this.refreshRuns();
    const current = this.state.selected;
    if (current) await this.open(current.run_id);
  }

  async approve(runId: string, stage: string): Promise<void> {
    await this.mutate(() => this.api.approve(runId, stage), runId);
  }

  async rejectHold(runId: string, stage: string): Promise<void> {
    await this.mutate(() => this.api.reject(runId, stage), runId);
  }

  async rejectWithEdit(runId: string, scenario: string): Promise<void> {
    await this.mutate(
      () => this.api.reject(runId, "screenplay", { editedScenario: scenario }),
      runId,
    );
  }

  async rejectRegenerate(runId: string, stage: string): Promise<void> {
    await this.mutate(
      () => this.api.reject(runId, stage, { regenerate: true }),
      runId,
    );
  }

  async regenerate(runId: string, stage: string): Promise<void> {
    await this.mutate(() => this.api.regenerate(runId, stage), runId);
  }

  startPolling(everyMs: number, scheduler: Scheduler = intervalScheduler) {
    return scheduler(() => {
      void this.refresh();
    }, everyMs);
  }

  /** Run one mutation; keep only what the server says afterwards. */
  private async mutate(
    action: () => Promise<RunDetail>,
    runId: string,
  ): Promise<void> {
    try {
      const detail = await action();
      this.patch({ selected: detail, notice: null, online: true });
    } catch (err) {
      this.fail(err);
      if (!(err instanceof ApiError) || !err.offline) {
        // the action was refused, not lost: reload server truth
        await this.open(runId);
      }
    }
    await this.refreshRuns();
  }

  private fail(err: unknown): void {
    if (err instanceof ApiError) {
      if (err.offline) {
        this.patch({ online: false });
      } else {
        // conflicts and validation errors carry the server's own words
        this.patch({ notice: err.detail, online: true });
      }
      return;
    }
    throw err;
  }
}
