/** Job dashboard logic: checkpoint/job polling and the fine-tune shot
 * presets exposed as one-click options. */

import { ApiClient } from "./api";
import { JobRecord } from "./wire";

export const SHOT_PRESETS = [0, 1, 2, 4, 5, 10, 20] as const;
export type ShotPreset = (typeof SHOT_PRESETS)[number];

export function finetuneBody(
  checkpoint: string,
  dataset: string,
  shots: ShotPreset,
  steps?: number,
): { checkpoint: string; dataset: string; shots: number; steps?: number } {
  const body: { checkpoint: string; dataset: string; shots: number; steps?: number } = {
    checkpoint,
    dataset,
    shots,
  };
  if (steps !== undefined) body.steps = steps;
  return body;
}

export interface JobView {
  id: string;
  kind: string;
  status: string;
  message: string;
}

export function describeJob(job: JobRecord): JobView {
  let message = "";
  if (job.status === "failed") {
    message = job.error ?? "failed without a message";
  } else if (job.status === "done" && typeof job.artifacts["checkpoint"] === "string") {
    message = `checkpoint ${job.artifacts["checkpoint"]}`;
  }
  return { id: job.id, kind: job.kind, status: job.status, message };
}

/** Pull-based poller: the UI calls start() with setInterval in the browser,
 * tests drive tick() directly. */
export class JobPoller {
  private watched = new Set<string>();
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly onUpdate: (job: JobView) => void,
    private readonly onSettled?: (job: JobView) => void,
  ) {}

  watch(jobId: string): void {
    this.watched.add(jobId);
  }

  watching(): string[] {
    return [...this.watched];
  }

  async tick(): Promise<void> {
    for (const id of [...this.watched]) {
      const job = describeJob(await this.api.job(id));
      this.onUpdate(job);
      if (job.status === "done" || job.status === "failed") {
        this.watched.delete(id);
        this.onSettled?.(job);
      }
    }
  }

  start(intervalMs = 1000): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.tick(), intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
