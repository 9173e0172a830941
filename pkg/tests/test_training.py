import numpy as np
import pytest
import torch

from planforge.dataset import gen_pentagon_set
from planforge.denoiser import (
    ModelConfig,
    TrainConfig,
    build_model,
    fine_tune,
    load_checkpoint,
    save_checkpoint,
    train,
)
from planforge.diffusion import cosine_schedule
from planforge.errors import NumericError, ValidationError


def toy_cfg():
    return ModelConfig(
        d_model=16, num_heads=2, num_blocks=1, max_rooms=8,
        max_corners_per_room=8, coord_bins=32, discrete_threshold=2,
    )


@pytest.fixture(scope="module")
def records():
    return gen_pentagon_set(seed=11, n=4)


@pytest.fixture(scope="module")
def sched():
    return cosine_schedule(16)


class TestLrSchedule:
    def test_endpoints(self):
        tc = TrainConfig(steps=500, lr_start=1e-3, lr_end=1e-5)
        assert tc.lr_at(0) == pytest.approx(1e-3)
        assert tc.lr_at(499) == pytest.approx(1e-5, abs=1e-9)

    def test_monotone(self):
        tc = TrainConfig(steps=100, lr_start=1e-3, lr_end=1e-5)
        lrs = [tc.lr_at(i) for i in range(100)]
        assert all(a >= b for a, b in zip(lrs, lrs[1:]))

    def test_single_step(self):
        assert TrainConfig(steps=1).lr_at(0) == pytest.approx(1e-3)


class TestTrainLoop:
    def test_deterministic(self, records, sched):
        tc = TrainConfig(steps=12, batch_size=4, seed=5, checkpoint_every=100)
        m1, log1 = train(build_model(toy_cfg(), seed=2), records, sched, tc)
        m2, log2 = train(build_model(toy_cfg(), seed=2), records, sched, tc)
        assert log1 == log2
        for p1, p2 in zip(m1.parameters(), m2.parameters()):
            assert torch.equal(p1, p2)

    def test_training_improves_on_init(self, records, sched):
        def eval_mse(model):
            from planforge.denoiser.training import prepare_records
            from planforge.diffusion import LayoutTensor, forward_diffuse

            data = prepare_records(records, toy_cfg())
            gen = torch.Generator().manual_seed(77)
            errs = []
            for t in range(1, sched.T + 1, 2):
                tb = torch.full((len(records),), t, dtype=torch.long)
                eps = torch.randn(data.coords.shape, generator=gen) * data.slot_mask[..., None]
                x_t = forward_diffuse(LayoutTensor(data.coords, data.slot_mask), tb, eps, sched)
                with torch.no_grad():
                    eps_hat, _ = model(
                        x_t.coords, data.slot_mask, tb, data.type_idx, data.attn,
                        bcoords=data.bcoords, bmask=data.bmask,
                        null_flag=torch.zeros(len(records), dtype=torch.bool),
                    )
                m = data.slot_mask[..., None]
                errs.append(float((((eps_hat - eps) ** 2) * m).sum() / (m.sum() * 2)))
            return float(np.mean(errs))

        untrained = build_model(toy_cfg(), seed=2)
        baseline = eval_mse(untrained)
        tc = TrainConfig(steps=400, batch_size=8, seed=5, lr_end=5e-4, checkpoint_every=1000)
        trained, _ = train(build_model(toy_cfg(), seed=2), records, sched, tc)
        assert eval_mse(trained) < baseline

    def test_boundary_dropout_limit(self, records, sched):
        # p_drop = 1: boundary never seen, output independent of supplied B
        tc = TrainConfig(steps=40, batch_size=4, seed=5, p_drop_boundary=1.0,
                         checkpoint_every=1000)
        model, _ = train(build_model(toy_cfg(), seed=2), records, sched, tc)
        from planforge.diffusion import SampleRequest
        from planforge.sampler import sample
        from planforge.dataset import build_corner_histogram

        hist = build_corner_histogram(records)
        rec = records[0]
        a = sample(model, SampleRequest(graph=rec.graph, boundary=rec.plan.boundary,
                                        guidance=1.0, num_samples=1, seed=1), sched, hist)[0]
        other = records[1].plan.boundary
        b = sample(model, SampleRequest(graph=rec.graph, boundary=other,
                                        guidance=1.0, num_samples=1, seed=1), sched, hist)[0]
        for ra, rb in zip(a.rooms, b.rooms):
            assert np.allclose(ra.polygon.as_array(), rb.polygon.as_array(), atol=1e-5)

    def test_checkpoints_written(self, records, sched, tmp_path):
        tc = TrainConfig(steps=6, batch_size=2, seed=0, checkpoint_every=3)
        train(build_model(toy_cfg(), seed=1), records, sched, tc, out_dir=tmp_path)
        assert (tmp_path / "checkpoints" / "step-000003" / "manifest.json").exists()
        assert (tmp_path / "checkpoints" / "step-000006" / "manifest.json").exists()
        assert (tmp_path / "checkpoints" / "final" / "manifest.json").exists()
        assert (tmp_path / "loss.csv").exists()

    def test_divergence_aborts_and_keeps_checkpoints(self, records, sched, tmp_path):
        model = build_model(toy_cfg(), seed=1)
        keep = save_checkpoint(model, tmp_path / "checkpoints" / "step-000001")
        digest_before = (keep / "manifest.json").read_text()
        with torch.no_grad():
            model.input_proj.weight.fill_(float("nan"))
        tc = TrainConfig(steps=4, batch_size=2, seed=0, checkpoint_every=100)
        with pytest.raises(NumericError):
            train(model, records, sched, tc, out_dir=tmp_path)
        assert (keep / "manifest.json").read_text() == digest_before
        assert not (tmp_path / "checkpoints" / "final").exists()

    def test_threshold_must_fit_schedule(self, records):
        tiny_sched = cosine_schedule(2)
        tc = TrainConfig(steps=2, batch_size=2)
        with pytest.raises(ValidationError):
            train(build_model(toy_cfg(), seed=1), records, tiny_sched, tc)


class TestFineTune:
    def test_zero_shots_identity(self, records, sched):
        model = build_model(toy_cfg(), seed=3)
        before = {n: p.clone() for n, p in model.named_parameters()}
        tuned, log = fine_tune(model, records, 0, sched, TrainConfig(steps=5, batch_size=2))
        assert log == []
        for n, p in tuned.named_parameters():
            assert torch.equal(before[n], p)

    def test_deterministic(self, records, sched):
        tc = TrainConfig(steps=8, batch_size=2, seed=4, checkpoint_every=100)
        a, _ = fine_tune(build_model(toy_cfg(), seed=3), records, 2, sched, tc)
        b, _ = fine_tune(build_model(toy_cfg(), seed=3), records, 2, sched, tc)
        for p1, p2 in zip(a.parameters(), b.parameters()):
            assert torch.equal(p1, p2)

    def test_shot_count_bound(self, records, sched):
        with pytest.raises(ValidationError):
            fine_tune(build_model(toy_cfg(), seed=3), records, 99, sched,
                      TrainConfig(steps=2, batch_size=2))
