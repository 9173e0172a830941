/** Thin typed client for the workbench API; every response runs through its
 * wire schema before the UI sees it. */

import {
  checkpointListSchema,
  datasetListSchema,
  errorPayloadSchema,
  FieldErrors,
  healthSchema,
  jobRecordSchema,
  sampleRequestSchema,
  sampleResponseSchema,
  SampleRequestBody,
  SampleResponse,
} from "./wire";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly fieldErrors: FieldErrors,
  ) {
    super(
      fieldErrors.map((e) => `${e.field}: ${e.message}`).join("; ") ||
        `request failed with status ${status}`,
    );
  }
}

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = fetch as unknown as FetchLike,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    const payload = await response.json();
    if (!response.ok) {
      const parsed = errorPayloadSchema.safeParse(payload);
      throw new ApiError(
        response.status,
        parsed.success
          ? parsed.data.errors
          : [{ field: "request", message: JSON.stringify(payload) }],
      );
    }
    return payload;
  }

  private post(path: string, body: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async health() {
    return healthSchema.parse(await this.request("/api/health"));
  }

  async checkpoints() {
    return checkpointListSchema.parse(await this.request("/api/checkpoints"))
      .checkpoints;
  }

  async datasets() {
    return datasetListSchema.parse(await this.request("/api/datasets")).datasets;
  }

  async sample(body: SampleRequestBody): Promise<SampleResponse> {
    sampleRequestSchema.parse(body);
    return sampleResponseSchema.parse(await this.post("/api/sample", body));
  }

  async submitTrain(body: { dataset: string; steps?: number; seed?: number }) {
    return (await this.post("/api/jobs/train", body)) as { id: string };
  }

  async submitFinetune(body: {
    checkpoint: string;
    dataset: string;
    shots: number;
    steps?: number;
    seed?: number;
  }) {
    return (await this.post("/api/jobs/finetune", body)) as { id: string };
  }

  async submitEvaluate(body: {
    checkpoint: string;
    dataset: string;
    sample_count?: number;
  }) {
    return (await this.post("/api/evaluate", body)) as { id: string };
  }

  async job(id: string) {
    return jobRecordSchema.parse(await this.request(`/api/jobs/${id}`));
  }
}
