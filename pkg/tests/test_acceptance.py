"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest -v -s tests/test_acceptance.py`. The overfit training run
is shared by the smoke, trend, and CLI-determinism criteria through a
session fixture, with per-criterion budgets asserted individually.
"""

import json
import time

import numpy as np
import pytest
import torch
from click.testing import CliRunner

import planforge as pf
from planforge.dataset import (
    CornerHistogram,
    apply_drift,
    build_corner_histogram,
    few_shot_subset,
    gen_pentagon_set,
    record_to_dict,
    sample_corner_counts,
    validate_record_geometry,
)
from planforge.denoiser import (
    ModelConfig,
    TrainConfig,
    build_masks,
    build_model,
    compute_loss,
    condition_tensors,
    boundary_tensors,
    load_checkpoint,
    train,
)
from planforge.diffusion import (
    LayoutTensor,
    SampleRequest,
    cfg_blend,
    cosine_schedule,
    forward_diffuse,
    slot_mask,
)
from planforge.denoiser.training import prepare_records
from planforge.features import geometric_features
from planforge.geometry import (
    Boundary,
    BubbleGraph,
    make_floorplan,
    make_polygon,
    out_of_boundary_ratio,
)
from planforge.metrics import (
    boundary_violations,
    diversity_score,
    fid,
    graph_compatibility,
)
from planforge.sampler import sample
from planforge.workbench.cli import main as cli_main

# smoke-train setup (toy config pinned by the criterion: d_model=64, 2 blocks)
SMOKE_STEPS = 2000
SMOKE_BATCH = 24
SMOKE_LR_END = 1e-4
SMOKE_DISCRETE_WEIGHT = 1.0
SMOKE_TRAIN_SEED = 3
SMOKE_INIT_SEED = 1
SMOKE_DATA_SEED = 7


def report(name: str, ok: bool, started: float, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    extra = f" | {detail}" if detail else ""
    print(f"ACCEPTANCE {name}: {status} ({time.time() - started:.1f}s){extra}")


class Timer:
    def __enter__(self):
        self.t0 = time.time()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.time() - self.t0


# ---------------------------------------------------------------------------
# shared smoke-training run


@pytest.fixture(scope="session")
def smoke_run(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("smoke-run")
    records = gen_pentagon_set(seed=SMOKE_DATA_SEED, n=8)
    cfg = ModelConfig(d_model=64, num_blocks=2)
    sched = cosine_schedule(1000)
    tc = TrainConfig(
        steps=SMOKE_STEPS,
        batch_size=SMOKE_BATCH,
        lr_start=1e-3,
        lr_end=SMOKE_LR_END,
        p_drop_boundary=0.1,
        discrete_loss_weight=SMOKE_DISCRETE_WEIGHT,
        seed=SMOKE_TRAIN_SEED,
        checkpoint_every=200,
    )
    model = build_model(cfg, seed=SMOKE_INIT_SEED)
    t0 = time.time()
    model, log = train(model, records, sched, tc, out_dir=out_dir)
    return {
        "model": model,
        "records": records,
        "sched": sched,
        "cfg": cfg,
        "hist": build_corner_histogram(records),
        "out_dir": out_dir,
        "log": log,
        "train_seconds": time.time() - t0,
    }


def stratified_training_mse(model, records, sched, t_stride=10, seed=999):
    """Training-distribution MSE: every record at every t on a uniform grid,
    fresh noise, boundary-conditional path."""
    data = prepare_records(records, model.cfg)
    gen = torch.Generator().manual_seed(seed)
    N = data.coords.shape[0]
    errs = []
    with torch.no_grad():
        for t in range(1, sched.T + 1, t_stride):
            tb = torch.full((N,), t, dtype=torch.long)
            eps = torch.randn(data.coords.shape, generator=gen) * data.slot_mask[..., None]
            x_t = forward_diffuse(LayoutTensor(data.coords, data.slot_mask), tb, eps, sched)
            eps_hat, _ = model(
                x_t.coords, data.slot_mask, tb, data.type_idx, data.attn,
                bcoords=data.bcoords, bmask=data.bmask,
                null_flag=torch.zeros(N, dtype=torch.bool),
            )
            m = data.slot_mask[..., None]
            errs.append(float((((eps_hat - eps) ** 2) * m).sum() / (m.sum() * 2)))
    return float(np.mean(errs))


# ---------------------------------------------------------------------------
# criteria


def test_schedule_suite():
    with Timer() as timer:
        ok = True
        for T in (10, 100, 1000):
            sched = cosine_schedule(T)
            ok &= sched.alpha_bar[0] > 0.99
            ok &= sched.alpha_bar[-1] < 0.01
            ok &= bool(np.all(np.diff(sched.alpha_bar) < 0.0))
    report("schedule-suite", ok and timer.elapsed < 1.0, timer.t0,
           f"budget 1s, took {timer.elapsed:.2f}s")
    assert ok
    assert timer.elapsed < 1.0


def test_forward_process_statistics():
    with Timer() as timer:
        sched = cosine_schedule(1000)
        R, C = 6, 6
        counts = [6, 6, 5, 6, 4, 6]
        mask = slot_mask(counts, R, C)
        gen = torch.Generator().manual_seed(1234)
        coords = torch.rand(R, C, 2, generator=gen, dtype=torch.float64) * 1.6 - 0.8
        coords = coords * mask[..., None]
        x0_real = coords[mask[..., None].expand(R, C, 2)]
        ok = True
        details = []
        for t in (250, 500, 750):
            draws = 10_000
            eps = torch.randn(draws, R, C, 2, generator=gen, dtype=torch.float64)
            eps = eps * mask[..., None]
            x_t = forward_diffuse(
                LayoutTensor(coords.expand(draws, R, C, 2), mask.expand(draws, R, C)),
                t, eps, sched,
            )
            real = mask[..., None].expand(draws, R, C, 2)
            vals = x_t.coords[real].reshape(draws, -1)
            emp_mean = vals.mean(dim=0)
            # pooled estimate of the mean scaling factor sqrt(abar_t)
            scale_hat = float((emp_mean @ x0_real) / (x0_real @ x0_real))
            scale_true = float(np.sqrt(sched.alpha_bar[t]))
            mean_rel = abs(scale_hat - scale_true) / scale_true
            emp_var = float(vals.var(dim=0, unbiased=True).mean())
            var_rel = abs(emp_var - (1 - sched.alpha_bar[t])) / (1 - sched.alpha_bar[t])
            details.append(f"t={t}: mean rel {mean_rel:.3%}, var rel {var_rel:.3%}")
            ok &= mean_rel < 0.02 and var_rel < 0.02
    report("forward-process-statistics", ok and timer.elapsed < 10.0, timer.t0,
           "; ".join(details))
    assert ok
    assert timer.elapsed < 10.0


def test_cfg_endpoints_and_affinity():
    with Timer() as timer:
        gen = torch.Generator().manual_seed(7)
        a = torch.randn(6, 5, 2, generator=gen, dtype=torch.float64)
        b = torch.randn(6, 5, 2, generator=gen, dtype=torch.float64)
        ok = torch.equal(cfg_blend(a, b, 1.0), a)
        ok &= torch.equal(cfg_blend(a, b, 0.0), b)
        base = cfg_blend(a, b, 0.0)
        one = cfg_blend(a, b, 1.0)
        for lam in np.linspace(0.05, 0.95, 7):
            lhs = cfg_blend(a, b, float(lam)) - base
            rhs = float(lam) * (one - base)
            ok &= bool((lhs - rhs).abs().max() < 1e-12)
    report("cfg-endpoints", bool(ok), timer.t0)
    assert ok


def test_mask_oracle_500():
    from test_masks import oracle_masks, random_instance

    with Timer() as timer:
        cfg = ModelConfig(d_model=8, num_heads=2, max_rooms=5, max_corners_per_room=6)
        rng = np.random.default_rng(2024)
        ok = True
        for _ in range(500):
            counts, graph = random_instance(rng, cfg)
            masks = build_masks(counts, graph, cfg)
            csa_o, gsa_o, rca_o = oracle_masks(counts, graph, cfg)
            ok &= (masks.csa == csa_o).all()
            ok &= (masks.gsa == gsa_o).all()
            ok &= (masks.rca == rca_o).all()
            ok &= not (masks.csa & masks.rca).any()
            ok &= ((masks.csa | masks.rca) <= masks.gsa).all()
    report("mask-oracle", bool(ok) and timer.elapsed < 30.0, timer.t0,
           f"500 instances in {timer.elapsed:.1f}s")
    assert ok
    assert timer.elapsed < 30.0


def test_gradient_check():
    with Timer() as timer:
        cfg = ModelConfig(
            d_model=8, num_heads=2, num_blocks=1, max_rooms=1,
            max_corners_per_room=4, coord_bins=8, discrete_threshold=2,
            max_boundary_corners=4,
        )
        model = build_model(cfg, seed=0, dtype=torch.float64)
        graph = BubbleGraph(1, ("living",))
        counts = [4]
        gen = torch.Generator().manual_seed(5)
        smask = slot_mask(counts, 1, 4)[None]
        coords = (torch.randn(1, 1, 4, 2, generator=gen, dtype=torch.float64) * 0.4)
        coords = coords * smask[..., None]
        eps_true = torch.randn(1, 1, 4, 2, generator=gen, dtype=torch.float64)
        eps_true = eps_true * smask[..., None]
        bins = torch.randint(0, cfg.coord_bins, (1, 1, 4, 2), generator=gen)
        t = torch.tensor([2])
        masks = {k: v[None] for k, v in build_masks(counts, graph, cfg).as_torch().items()}
        type_idx = condition_tensors(graph, cfg)[None]
        boundary = Boundary(make_polygon([(-0.8, -0.8), (0.8, -0.8), (0.8, 0.8), (-0.8, 0.8)]))
        bc, bm = boundary_tensors(boundary, cfg, dtype=torch.float64)

        def total_loss() -> torch.Tensor:
            # one boundary-conditional term plus one null-boundary term so
            # every parameter tensor, the null token included, gets gradient
            eps_b, logits_b = model(
                coords, smask, t, type_idx, masks, bcoords=bc, bmask=bm,
                null_flag=torch.zeros(1, dtype=torch.bool),
            )
            loss_b, _ = compute_loss(
                eps_b, eps_true, logits_b, bins, t, smask, cfg.discrete_threshold, 0.5
            )
            eps_n, logits_n = model(coords, smask, t, type_idx, masks)
            loss_n, _ = compute_loss(
                eps_n, eps_true, logits_n, bins, t, smask, cfg.discrete_threshold, 0.5
            )
            return loss_b + loss_n

        loss = total_loss()
        loss.backward()
        analytic = {n: p.grad.clone() for n, p in model.named_parameters()}

        h = 1e-5
        worst = 0.0
        worst_name = ""
        with torch.no_grad():
            for name, param in model.named_parameters():
                grad_fd = torch.zeros_like(param)
                flat = param.view(-1)
                fd_flat = grad_fd.view(-1)
                for i in range(flat.numel()):
                    orig = float(flat[i])
                    flat[i] = orig + h
                    up = float(total_loss())
                    flat[i] = orig - h
                    down = float(total_loss())
                    flat[i] = orig
                    fd_flat[i] = (up - down) / (2 * h)
                a = analytic[name]
                denom = torch.maximum(a.abs(), grad_fd.abs())
                mask_sig = denom > 1e-7
                if mask_sig.any():
                    rel = ((a - grad_fd).abs() / denom)[mask_sig].max()
                    if float(rel) > worst:
                        worst = float(rel)
                        worst_name = name
                small_ok = ((a - grad_fd).abs()[~mask_sig] < 1e-8).all()
                assert bool(small_ok), f"small-gradient mismatch in {name}"
        ok = worst < 1e-4
    report("gradient-check", ok and timer.elapsed < 60.0, timer.t0,
           f"max rel err {worst:.2e} in {worst_name}")
    assert ok, f"max rel err {worst} in {worst_name}"
    assert timer.elapsed < 60.0


def test_overfit_smoke_train(smoke_run):
    with Timer() as timer:
        model = smoke_run["model"]
        records = smoke_run["records"]
        sched = smoke_run["sched"]
        hist = smoke_run["hist"]
        mse = stratified_training_mse(model, records, sched)

        gcs, flags = [], []
        for i, rec in enumerate(records):
            req = SampleRequest(
                graph=rec.graph, boundary=rec.plan.boundary,
                guidance=1.0, num_samples=1, seed=100 + i,
            )
            plan = sample(model, req, sched, hist=hist)[0]
            gcs.append(graph_compatibility(rec.graph, plan))
            flags.extend(boundary_violations([plan], rec.plan.boundary, tau=0.01))
        gc_mean = float(np.mean(gcs))
        bc_rate = float(np.mean(flags))
        total_time = smoke_run["train_seconds"] + timer.elapsed
        ok = mse < 0.02 and gc_mean < 0.5 and bc_rate < 0.25
    report(
        "overfit-smoke-train",
        ok and total_time < 900.0,
        timer.t0,
        f"MSE {mse:.4f} (<0.02), GC {gc_mean:.3f} (<0.5), BC {bc_rate:.3f} (<0.25), "
        f"train+eval {total_time:.0f}s (<900s)",
    )
    assert mse < 0.02
    assert gc_mean < 0.5
    assert bc_rate < 0.25
    assert total_time < 900.0


def test_boundary_adherence_trend(smoke_run):
    with Timer() as timer:
        sched = smoke_run["sched"]
        hist = smoke_run["hist"]
        records = smoke_run["records"][:2]
        results = {}
        for step in (200, 2000):
            ckpt = smoke_run["out_dir"] / "checkpoints" / f"step-{step:06d}"
            model, _ = load_checkpoint(ckpt)
            ds_vals, flags = [], []
            for c, rec in enumerate(records):
                req = SampleRequest(
                    graph=rec.graph, boundary=rec.plan.boundary,
                    guidance=1.0, num_samples=32, seed=7_000 + c * 32,
                )
                plans = sample(model, req, sched, hist=hist)
                ds_vals.append(diversity_score([geometric_features(p) for p in plans]))
                flags.extend(boundary_violations(plans, rec.plan.boundary, tau=0.01))
            results[step] = {"ds": float(np.mean(ds_vals)), "bc": float(np.mean(flags))}
        bc_trend = results[200]["bc"] >= results[2000]["bc"]
        ds_trend = results[200]["ds"] >= results[2000]["ds"]
        ok = bc_trend and ds_trend
    report(
        "boundary-adherence-trend",
        ok and timer.elapsed < 600.0,
        timer.t0,
        f"BC 200={results[200]['bc']:.3f} >= 2000={results[2000]['bc']:.3f}; "
        f"DS 200={results[200]['ds']:.4f} >= 2000={results[2000]['ds']:.4f}",
    )
    assert bc_trend
    assert ds_trend
    assert timer.elapsed < 600.0


def test_metric_oracles():
    with Timer() as timer:
        rng = np.random.default_rng(0)
        feats = list(rng.standard_normal((40, 6)))
        ok = fid(feats, feats) < 1e-6
        a = [np.array([0.0]), np.array([2.0])]
        b = [np.array([10.0]), np.array([12.0])]
        ok &= abs(fid(a, b) - 100.0) < 1e-6
        ok &= diversity_score([np.array([0.0, 0.0]), np.array([2.0, 0.0])]) == 2.0
        outside = [
            make_floorplan([("living", [(5, 5), (5.4, 5), (5.4, 5.4), (5, 5.4)])])
            for _ in range(4)
        ]
        boundary = Boundary(make_polygon([(0, 0), (1, 0), (1, 1), (0, 1)]))
        flags = boundary_violations(outside, boundary)
        ok &= flags.all() and float(np.std(flags.astype(float))) == 0.0
        plan = make_floorplan([("living", [(0, 0), (1, 0), (1, 1), (0, 1)])])
        half = Boundary(make_polygon([(0, 0), (0.5, 0), (0.5, 1), (0, 1)]))
        ratio = out_of_boundary_ratio(plan, half)
        ok &= abs(ratio - 0.5) <= 0.01
    report("metric-oracles", bool(ok) and timer.elapsed < 10.0, timer.t0,
           f"half-overlap {ratio:.4f}")
    assert ok
    assert timer.elapsed < 10.0


def test_dataset_properties():
    with Timer() as timer:
        records = gen_pentagon_set(seed=7, n=20)
        ok = len(records) == 20
        for rec in records:
            validate_record_geometry(rec)
            ok &= len(rec.plan.rooms[0].polygon.corners) == 5
            ok &= sum(1 for e in rec.graph.edges if e[0] == 0 and e[1] == 1) == 5
        drift_back = apply_drift(apply_drift(records))
        ok &= [record_to_dict(r) for r in drift_back] == [record_to_dict(r) for r in records]
        sub_a = few_shot_subset(records, 5, seed=11)
        sub_b = few_shot_subset(records, 5, seed=11)
        ok &= [r.id for r in sub_a] == [r.id for r in sub_b]

        from scipy import stats

        hist = CornerHistogram({("living", 4): 5, ("living", 5): 3, ("living", 6): 2})
        graph = BubbleGraph(1, ("living",))
        draws = [sample_corner_counts(graph, hist, seed=s)[0] for s in range(10_000)]
        observed = [draws.count(k) for k in (4, 5, 6)]
        _, p = stats.chisquare(observed, [5000, 3000, 2000])
        ok &= p > 0.01
    report("dataset-properties", bool(ok) and timer.elapsed < 30.0, timer.t0,
           f"chi-square p={p:.4f}")
    assert ok
    assert timer.elapsed < 30.0


def test_end_to_end_cli_determinism(smoke_run, tmp_path):
    with Timer() as timer:
        ckpt = smoke_run["out_dir"] / "checkpoints" / "final"
        condition = record_to_dict(smoke_run["records"][0])
        cond_path = tmp_path / "cond.json"
        cond_path.write_text(json.dumps(condition))
        runner = CliRunner()
        payloads = []
        for name in ("run1", "run2"):
            out = tmp_path / name
            result = runner.invoke(
                cli_main,
                ["sample", "--checkpoint", str(ckpt), "--condition", str(cond_path),
                 "--lambda", "1.0", "--n", "2", "--seed", "42", "--out", str(out)],
            )
            assert result.exit_code == 0, result.output
            payloads.append((out / "samples.jsonl").read_bytes())
        ok = payloads[0] == payloads[1]
    report("end-to-end-determinism", ok and timer.elapsed < 120.0, timer.t0,
           f"{len(payloads[0])} bytes per run")
    assert ok
    assert timer.elapsed < 120.0
