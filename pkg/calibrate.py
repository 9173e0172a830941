"""Smoke-train calibration harness (development tool, not shipped)."""
import argparse
import time

import numpy as np
import torch

import planforge as pf
from planforge.dataset import build_corner_histogram
from planforge.denoiser import ModelConfig, TrainConfig, build_model, train
from planforge.denoiser.training import prepare_records
from planforge.diffusion import LayoutTensor, SampleRequest, cosine_schedule, forward_diffuse
from planforge.metrics import graph_compatibility
from planforge.sampler import sample


def sweep_mse(model, data, sched, t_stride=10):
    """Stratified training-MSE estimate: every record x every t on a grid."""
    gen = torch.Generator().manual_seed(999)
    N = data.coords.shape[0]
    errs, bands = [], {}
    acc_num = acc_den = 0
    with torch.no_grad():
        for t in range(1, sched.T + 1, t_stride):
            tb = torch.full((N,), t, dtype=torch.long)
            eps = torch.randn(data.coords.shape, generator=gen) * data.slot_mask[..., None]
            x_t = forward_diffuse(LayoutTensor(data.coords, data.slot_mask), tb, eps, sched)
            eps_hat, logits = model(
                x_t.coords, data.slot_mask, tb, data.type_idx, data.attn,
                bcoords=data.bcoords, bmask=data.bmask,
                null_flag=torch.zeros(N, dtype=torch.bool),
            )
            m = data.slot_mask[..., None]
            e = float((((eps_hat - eps) ** 2) * m).sum() / (m.sum() * 2))
            errs.append(e)
            band = "t<=32" if t <= 32 else ("t<=100" if t <= 100 else ("t<=500" if t <= 500 else "t>500"))
            bands.setdefault(band, []).append(e)
            if t <= 32:
                pred = logits.argmax(-1)
                acc_num += int(((pred == data.bins) & m.bool()).sum())
                acc_den += int(m.sum()) * 2
    return float(np.mean(errs)), {k: float(np.mean(v)) for k, v in bands.items()}, (
        acc_num / max(acc_den, 1)
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=16)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--lr-end", type=float, default=1e-4)
    ap.add_argument("--weight", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--init-seed", type=int, default=1)
    ap.add_argument("--skip-sampling", action="store_true")
    args = ap.parse_args()

    recs = pf.gen_pentagon_set(seed=7, n=8)
    types = [tuple(r.graph.room_types) for r in recs]
    print("distinct type assignments:", len(set(types)), "of", len(types))
    hist = build_corner_histogram(recs)
    cfg = ModelConfig()
    model = build_model(cfg, seed=args.init_seed)
    sched = cosine_schedule(1000)
    tc = TrainConfig(
        steps=args.steps, batch_size=args.batch, lr_start=1e-3, lr_end=args.lr_end,
        p_drop_boundary=0.1, discrete_loss_weight=args.weight, seed=args.seed,
        checkpoint_every=10_000,
    )
    t0 = time.time()
    model, log = train(model, recs, sched, tc)
    print(f"train {args.steps} steps batch {args.batch}: {time.time()-t0:.0f}s")
    data = prepare_records(recs, cfg)
    mse, bands, acc = sweep_mse(model, data, sched)
    print(f"sweep MSE {mse:.4f} | bands {bands} | discrete argmax acc {acc:.4f}")

    if not args.skip_sampling:
        gcs, bcs = [], []
        t0 = time.time()
        for i, rec in enumerate(recs):
            req = SampleRequest(graph=rec.graph, boundary=rec.plan.boundary,
                                guidance=1.0, num_samples=1, seed=100 + i)
            plan = sample(model, req, sched, hist=hist)[0]
            gcs.append(graph_compatibility(rec.graph, plan))
            bcs.append(pf.out_of_boundary_ratio(plan, rec.plan.boundary) > 0.01)
        print(f"sampling: {time.time()-t0:.0f}s | GC {gcs} mean {np.mean(gcs):.3f} | "
              f"BC {bcs} rate {np.mean(bcs):.3f}")


if __name__ == "__main__":
    main()
