/** Steering-session state: generation settings plus an append-only history
 * of (request, response) pairs. Every number shown in the UI comes from the
 * server; replaying a stored request (seed included) reproduces its gallery. */

import {
  SampleRequestBody,
  SampleResponse,
  sampleRequestSchema,
  WireGraph,
} from "./wire";

export interface HistoryEntry {
  readonly request: SampleRequestBody;
  readonly response: SampleResponse;
  readonly at: number;
}

export interface SessionSettings {
  checkpoint: string | null;
  lambda: number;
  n: number;
  seed: number;
}

export class Session {
  settings: SessionSettings = { checkpoint: null, lambda: 1.0, n: 4, seed: 0 };
  private history: HistoryEntry[] = [];

  /** Validated POST body for /api/sample from the current settings. */
  buildRequest(
    graph: WireGraph,
    boundary: [number, number][] | null,
  ): SampleRequestBody {
    const body: SampleRequestBody = {
      checkpoint: this.settings.checkpoint,
      graph,
      boundary,
      lambda: this.settings.lambda,
      n: this.settings.n,
      seed: this.settings.seed,
    };
    return sampleRequestSchema.parse(body);
  }

  record(request: SampleRequestBody, response: SampleResponse): HistoryEntry {
    const entry: HistoryEntry = { request, response, at: Date.now() };
    this.history.push(entry);
    return entry;
  }

  /** History snapshot; the underlying log is append-only. */
  entries(): readonly HistoryEntry[] {
    return [...this.history];
  }

  /** Pairs of entries for side-by-side guidance comparison. */
  comparison(indexA: number, indexB: number): [HistoryEntry, HistoryEntry] | null {
    const a = this.history[indexA];
    const b = this.history[indexB];
    return a && b ? [a, b] : null;
  }
}
