/** Gallery view-model: the server's plans plus its batch metric block,
 * turned into render-ready items and badges. No metric math happens here. */

import { HistoryEntry } from "./session";
import { PlanRecord, SampleResponse } from "./wire";

export interface GalleryItem {
  index: number;
  plan: PlanRecord;
}

export interface GalleryModel {
  items: GalleryItem[];
  metrics: { gc: number; bc: number | null; ds: number | null };
  badges: string[];
  lambda: number;
  seed: number;
}

export function buildGallery(response: SampleResponse): GalleryModel {
  const badges: string[] = [];
  const n = response.plans.length;
  const { bc, ds, gc } = response.metrics;
  if (bc !== null) {
    const violators = Math.round(bc * n);
    badges.push(
      violators === 0
        ? "all samples inside boundary"
        : `${violators} of ${n} outside boundary`,
    );
  }
  if (ds !== null) {
    badges.push(`diversity ${ds.toFixed(3)}`);
  }
  badges.push(`graph mismatch ${gc.toFixed(2)}`);
  return {
    items: response.plans.map((plan, index) => ({ index, plan })),
    metrics: { gc, bc, ds },
    badges,
    lambda: response.lambda,
    seed: response.seed,
  };
}

export interface ComparisonModel {
  left: GalleryModel;
  right: GalleryModel;
  lambdaDelta: number;
}

export function buildComparison(
  a: HistoryEntry,
  b: HistoryEntry,
): ComparisonModel {
  const left = buildGallery(a.response);
  const right = buildGallery(b.response);
  return { left, right, lambdaDelta: right.lambda - left.lambda };
}
