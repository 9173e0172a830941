"""Evaluation scores: FID over feature Gaussians, diversity as covariance
trace, graph compatibility against the conditioning bubble diagram, and
boundary compatibility as a violation rate."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataset import CornerHistogram, FloorplanRecord, build_corner_histogram
from .denoiser import Denoiser
from .diffusion import NoiseSchedule, SampleRequest
from .errors import NumericError, ValidationError
from .features import FeatureExtractor
from .geometry import Boundary, BubbleGraph, Floorplan, extract_adjacency, out_of_boundary_ratio
from .sampler import sample

log = logging.getLogger(__name__)

EIGENVALUE_FLOOR = -1e-8


def _as_matrix(features: Sequence[np.ndarray]) -> np.ndarray:
    mat = np.asarray(features, dtype=np.float64)
    if mat.ndim != 2:
        raise ValidationError("features must be a set of equal-length vectors")
    return mat


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(mat)
    if w.min() < EIGENVALUE_FLOOR:
        raise NumericError(f"matrix has eigenvalue {w.min():.3e} below {EIGENVALUE_FLOOR}")
    w = np.clip(w, 0.0, None)
    return (u * np.sqrt(w)) @ u.T


def fid(features_a: Sequence[np.ndarray], features_b: Sequence[np.ndarray]) -> float:
    """Frechet distance between Gaussians fitted to the two feature sets.

    The trace of (Sa Sb)^(1/2) is computed through the eigendecomposition of
    the symmetrized product sqrt(Sa) Sb sqrt(Sa); eigenvalues below -1e-8
    raise, small negatives clamp to zero.
    """
    a, b = _as_matrix(features_a), _as_matrix(features_b)
    for name, mat in (("a", a), ("b", b)):
        if mat.shape[0] < 2:
            raise ValidationError(f"feature set {name} needs >= 2 vectors")
        if mat.shape[0] < mat.shape[1] + 1:
            log.warning(
                "feature set %s has %d vectors for dim %d; covariance is rank-deficient",
                name, mat.shape[0], mat.shape[1],
            )
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    sa = np.atleast_2d(np.cov(a, rowvar=False, ddof=1))
    sb = np.atleast_2d(np.cov(b, rowvar=False, ddof=1))
    root_a = _sqrtm_psd(sa)
    inner = root_a @ sb @ root_a
    inner = (inner + inner.T) / 2.0
    w = np.linalg.eigvalsh(inner)
    if w.min() < EIGENVALUE_FLOOR:
        raise NumericError(f"product eigenvalue {w.min():.3e} below {EIGENVALUE_FLOOR}")
    tr_sqrt = float(np.sqrt(np.clip(w, 0.0, None)).sum())
    return float(np.sum((mu_a - mu_b) ** 2) + np.trace(sa) + np.trace(sb) - 2.0 * tr_sqrt)


def diversity_score(features: Sequence[np.ndarray]) -> float:
    """Trace of the unbiased sample covariance of the feature vectors."""
    mat = _as_matrix(features)
    if mat.shape[0] < 2:
        raise ValidationError("diversity score needs >= 2 feature vectors")
    centered = mat - mat.mean(axis=0)
    return float((centered**2).sum() / (mat.shape[0] - 1))


def graph_compatibility(target: BubbleGraph, plan: Floorplan) -> int:
    """Type mismatches plus adjacency-flag disagreements between the target
    graph and the realized graph, under the identity room correspondence."""
    if target.num_rooms != len(plan.rooms):
        raise ValidationError(
            f"target graph has {target.num_rooms} rooms, plan has {len(plan.rooms)}"
        )
    realized = extract_adjacency(plan)
    score = sum(
        1
        for want, got in zip(target.room_types, realized.room_types)
        if want != got
    )
    for i, c, j in realized.edges:
        if target.connectivity(i, j) != c:
            score += 1
    return score


def boundary_violations(
    plans: Sequence[Floorplan], b: Boundary, tau: float = 0.01
) -> np.ndarray:
    """Per-plan violation flags; plans with no measurable room area (fully
    degenerate generations) count as violations."""
    flags = []
    for plan in plans:
        try:
            flags.append(out_of_boundary_ratio(plan, b) > tau)
        except ValidationError:
            flags.append(True)
    return np.array(flags, dtype=bool)


def boundary_compatibility(
    plans: Sequence[Floorplan], b: Boundary, tau: float = 0.01
) -> float:
    """Fraction of plans whose out-of-boundary area ratio exceeds tau."""
    if not plans:
        raise ValidationError("boundary compatibility needs at least one plan")
    return float(boundary_violations(plans, b, tau).mean())


# ---------------------------------------------------------------------------
# evaluation protocol


@dataclass(frozen=True)
class EvalProtocol:
    sample_count: int = 512
    ds_conditions: int = 4
    ds_samples: int = 100
    seed: int = 0
    guidance: float = 1.0
    tau: float = 0.01
    extractor: FeatureExtractor = field(default_factory=FeatureExtractor)

    def to_dict(self) -> dict:
        return {
            "sample_count": self.sample_count,
            "ds_conditions": self.ds_conditions,
            "ds_samples": self.ds_samples,
            "seed": self.seed,
            "guidance": self.guidance,
            "tau": self.tau,
            "extractor": {
                "kind": self.extractor.kind,
                "dim": self.extractor.dim,
                "seed": self.extractor.seed,
            },
        }


@dataclass(frozen=True)
class MetricsReport:
    fid: float
    gc_mean: float
    gc_std: float
    bc_mean: float
    bc_std: float
    ds_mean: float
    ds_std: float
    protocol: dict

    def to_dict(self) -> dict:
        return {
            "fid": self.fid,
            "gc_mean": self.gc_mean,
            "gc_std": self.gc_std,
            "bc_mean": self.bc_mean,
            "bc_std": self.bc_std,
            "ds_mean": self.ds_mean,
            "ds_std": self.ds_std,
            "protocol": self.protocol,
        }


def evaluate(
    model: Denoiser,
    sched: NoiseSchedule,
    eval_records: Sequence[FloorplanRecord],
    protocol: EvalProtocol = EvalProtocol(),
    hist: Optional[CornerHistogram] = None,
    ds_condition_records: Optional[Sequence[FloorplanRecord]] = None,
) -> MetricsReport:
    """Full evaluation pass: FID/GC/BC over `sample_count` generations
    conditioned on the eval set, DS over `ds_samples` generations for each
    of `ds_conditions` fixed conditions. Pure given (model, data, seeds)."""
    if not eval_records:
        raise ValidationError("evaluation needs a non-empty record set")
    if hist is None:
        hist = build_corner_histogram(eval_records)
    extractor = protocol.extractor

    # spread the sample budget across the eval records, preserving global
    # per-sample seed derivation (protocol.seed + global sample index)
    counts = [0] * len(eval_records)
    for i in range(protocol.sample_count):
        counts[i % len(eval_records)] += 1
    gen_features, gc_values, bc_flags = [], [], []
    offset = 0
    for rec, n in zip(eval_records, counts):
        if n == 0:
            continue
        req = SampleRequest(
            graph=rec.graph,
            boundary=rec.plan.boundary,
            guidance=protocol.guidance,
            num_samples=n,
            seed=protocol.seed + offset,
        )
        plans = sample(model, req, sched, hist=hist)
        for plan in plans:
            gen_features.append(extractor(plan))
            gc_values.append(graph_compatibility(rec.graph, plan))
        if rec.plan.boundary is not None:
            bc_flags.extend(
                boundary_violations(plans, rec.plan.boundary, protocol.tau).tolist()
            )
        offset += n
    ref_features = [extractor(rec.plan) for rec in eval_records]
    fid_value = fid(gen_features, ref_features)

    ds_records = list(ds_condition_records or eval_records[: protocol.ds_conditions])
    if len(ds_records) < protocol.ds_conditions:
        raise ValidationError(
            f"need {protocol.ds_conditions} DS conditions, have {len(ds_records)}"
        )
    ds_records = ds_records[: protocol.ds_conditions]
    ds_values = []
    for c, rec in enumerate(ds_records):
        req = SampleRequest(
            graph=rec.graph,
            boundary=rec.plan.boundary,
            guidance=protocol.guidance,
            num_samples=protocol.ds_samples,
            seed=protocol.seed + 1_000_000 + c * protocol.ds_samples,
        )
        plans = sample(model, req, sched, hist=hist)
        ds_values.append(diversity_score([extractor(p) for p in plans]))

    gc_arr = np.array(gc_values, dtype=np.float64)
    bc_arr = np.array(bc_flags, dtype=np.float64) if bc_flags else np.zeros(1)
    ds_arr = np.array(ds_values, dtype=np.float64)
    return MetricsReport(
        fid=fid_value,
        gc_mean=float(gc_arr.mean()),
        gc_std=float(gc_arr.std()),
        bc_mean=float(bc_arr.mean()),
        bc_std=float(bc_arr.std()),
        ds_mean=float(ds_arr.mean()),
        ds_std=float(ds_arr.std()),
        protocol=protocol.to_dict(),
    )
