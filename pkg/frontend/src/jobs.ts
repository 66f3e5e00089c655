/** Polls a run job until it settles, reporting progress along the way. */

import type { ApiClient } from "./api.js";
import type { Job } from "./types.js";

export type SleepFn = (ms: number) => Promise<void>;

const realSleep: SleepFn = (ms) =>
  new Promise((resolve) => setTimeout(resolve, ms));

export interface PollOptions {
  /** Poll interval; 1 s is plenty for a desk-scale service. */
  intervalMs?: number;
  onProgress?: (job: Job) => void;
  sleep?: SleepFn;
}

export class JobPoller {
  private cancelled = false;

  constructor(private readonly api: ApiClient) {}

  cancel(): void {
    this.cancelled = true;
  }

  /** Resolve with the settled job (state done or failed). */
  async poll(jobId: string, options: PollOptions = {}): Promise<Job> {
    const interval = options.intervalMs ?? 1000;
    const sleep = options.sleep ?? realSleep;
    let lastDone = -1;
    for (;;) {
      const job = await this.api.getJob(jobId);
      if (job.done < lastDone) {
        throw new Error(
          `job ${jobId} progress went backwards: ${lastDone} -> ${job.done}`,
        );
      }
      lastDone = job.done;
      options.onProgress?.(job);
      if (job.state === "done" || job.state === "failed") {
        return job;
      }
      if (this.cancelled) {
        throw new Error(`polling of job ${jobId} was cancelled`);
      }
      await sleep(interval);
    }
  }
}

export function progressLabel(job: Job): string {
  const failures =
    job.failed_segments > 0 ? `, ${job.failed_segments} failed` : "";
  return `${job.state} ${job.done}/${job.total}${failures}`;
}
