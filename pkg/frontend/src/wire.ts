/**
 * Wire schemas for the workbench HTTP API. The floorplan schema is the same
 * shape as dataset JSONL records, so anything the studio sends or receives
 * round-trips through the rest of the toolchain.
 */
import { z } from "zod";

export const ROOM_TYPES = [
  "living",
  "kitchen",
  "bedroom",
  "bathroom",
  "balcony",
  "corridor",
  "storage",
  "other",
] as const;
export type RoomType = (typeof ROOM_TYPES)[number];

export const pointSchema = z.tuple([z.number(), z.number()]);
export type WirePoint = z.infer<typeof pointSchema>;

export const edgeSchema = z.tuple([
  z.number().int().nonnegative(),
  z.union([z.literal(1), z.literal(-1)]),
  z.number().int().nonnegative(),
]);

export const roomSchema = z.object({
  type: z.string(),
  corners: z.array(pointSchema).min(3),
});

export const planRecordSchema = z.object({
  id: z.string(),
  rooms: z.array(roomSchema).min(1),
  boundary: z.array(pointSchema).min(3).nullable(),
  edges: z.array(edgeSchema),
});
export type PlanRecord = z.infer<typeof planRecordSchema>;

export const graphSchema = z
  .object({
    room_types: z.array(z.string()).min(1),
    edges: z.array(edgeSchema),
  })
  .superRefine((graph, ctx) => {
    const seen = new Set<string>();
    for (const [i, , j] of graph.edges) {
      if (i >= j || j >= graph.room_types.length) {
        ctx.addIssue({
          code: z.ZodIssueCode.custom,
          message: `edge (${i},${j}) must satisfy 0 <= i < j < ${graph.room_types.length}`,
        });
      }
      const key = `${i}-${j}`;
      if (seen.has(key)) {
        ctx.addIssue({
          code: z.ZodIssueCode.custom,
          message: `duplicate edge pair (${i},${j})`,
        });
      }
      seen.add(key);
    }
  });
export type WireGraph = z.infer<typeof graphSchema>;

export const sampleRequestSchema = z.object({
  checkpoint: z.string().nullable().optional(),
  graph: graphSchema,
  boundary: z.array(pointSchema).min(3).nullable(),
  lambda: z.number().min(0).max(1),
  n: z.number().int().min(1),
  seed: z.number().int(),
  corner_counts: z.array(z.number().int().min(3)).nullable().optional(),
});
export type SampleRequestBody = z.infer<typeof sampleRequestSchema>;

export const metricsBlockSchema = z.object({
  gc: z.number(),
  bc: z.number().nullable(),
  ds: z.number().nullable(),
});
export type MetricsBlock = z.infer<typeof metricsBlockSchema>;

export const sampleResponseSchema = z.object({
  checkpoint: z.string(),
  lambda: z.number(),
  seed: z.number(),
  plans: z.array(planRecordSchema),
  metrics: metricsBlockSchema,
});
export type SampleResponse = z.infer<typeof sampleResponseSchema>;

export const jobRecordSchema = z.object({
  id: z.string(),
  kind: z.enum(["train", "fine-tune", "evaluate"]),
  status: z.enum(["queued", "running", "done", "failed"]),
  params: z.record(z.unknown()).default({}),
  artifacts: z.record(z.unknown()).default({}),
  error: z.string().nullable(),
});
export type JobRecord = z.infer<typeof jobRecordSchema>;

export const checkpointListSchema = z.object({
  checkpoints: z.array(
    z.object({
      path: z.string(),
      step: z.number().nullable().optional(),
      digest: z.string().nullable().optional(),
    }),
  ),
});

export const datasetListSchema = z.object({
  datasets: z.array(
    z.object({
      name: z.string(),
      path: z.string(),
      record_count: z.number().optional(),
    }),
  ),
});

export const healthSchema = z.object({
  status: z.string(),
  checkpoint: z.string().nullable(),
  config_digest: z.string(),
});

export const errorPayloadSchema = z.object({
  errors: z.array(z.object({ field: z.string(), message: z.string() })),
});
export type FieldErrors = z.infer<typeof errorPayloadSchema>["errors"];
