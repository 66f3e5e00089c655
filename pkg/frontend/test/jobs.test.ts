import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { JobPoller, progressLabel } from "../src/jobs.js";
import { scriptedFetch } from "./fake_service.js";
import type { Job, JobState } from "../src/types.js";

function job(state: JobState, done: number, failed = 0): Job {
  return {
    job_id: "j1",
    doc_id: "FACC1/2021",
    config_summary: "T5 A(llm) P5",
    state,
    total: 4,
    done,
    failed_segments: failed,
    error: state === "failed" ? "boom" : null,
    created_at: 0,
  };
}

describe("JobPoller", () => {
  it("polls until done, reporting monotone progress at 1s intervals", async () => {
    const states = [
      job("queued", 0),
      job("running", 1),
      job("running", 3),
      job("done", 4),
    ];
    const { fetch } = scriptedFetch(states.map((body) => ({ status: 200, body })));
    const api = new ApiClient("http://svc", fetch);
    const sleeps: number[] = [];
    const seen: number[] = [];
    const settled = await new JobPoller(api).poll("j1", {
      onProgress: (progress) => seen.push(progress.done),
      sleep: async (ms) => {
        sleeps.push(ms);
      },
    });
    expect(settled.state).toBe("done");
    expect(seen).toEqual([0, 1, 3, 4]);
    expect(sleeps).toEqual([1000, 1000, 1000]);
  });

  it("resolves failed jobs instead of polling forever", async () => {
    const { fetch } = scriptedFetch([
      { status: 200, body: job("running", 1) },
      { status: 200, body: job("failed", 1, 3) },
    ]);
    const api = new ApiClient("http://svc", fetch);
    const settled = await new JobPoller(api).poll("j1", {
      sleep: async () => {},
    });
    expect(settled.state).toBe("failed");
    expect(settled.error).toBe("boom");
  });

  it("rejects if progress ever goes backwards", async () => {
    const { fetch } = scriptedFetch([
      { status: 200, body: job("running", 3) },
      { status: 200, body: job("running", 2) },
    ]);
    const api = new ApiClient("http://svc", fetch);
    await expect(
      new JobPoller(api).poll("j1", { sleep: async () => {} }),
    ).rejects.toThrow(/backwards/);
  });

  it("stops when cancelled", async () => {
    const { fetch } = scriptedFetch([
      { status: 200, body: job("running", 1) },
      { status: 200, body: job("running", 2) },
    ]);
    const api = new ApiClient("http://svc", fetch);
    const poller = new JobPoller(api);
    poller.cancel();
    await expect(
      poller.poll("j1", { sleep: async () => {} }),
    ).rejects.toThrow(/cancelled/);
  });
});

describe("progressLabel", () => {
  it("summarizes state, progress, and failures", () => {
    expect(progressLabel(job("running", 2))).toBe("running 2/4");
    expect(progressLabel(job("failed", 1, 3))).toBe("failed 1/4, 3 failed");
  });
});
