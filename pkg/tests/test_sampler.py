import numpy as np
import pytest
import torch

from planforge.dataset import CornerHistogram, build_corner_histogram, gen_pentagon_set
from planforge.denoiser import ModelConfig, TrainConfig, build_model, train
from planforge.diffusion import SampleRequest, cosine_schedule
from planforge.errors import NumericError, ValidationError
from planforge.geometry import BubbleGraph
from planforge.sampler import sample


def tiny_cfg():
    return ModelConfig(
        d_model=16, num_heads=2, num_blocks=1, max_rooms=8,
        max_corners_per_room=8, coord_bins=32, discrete_threshold=2,
    )


@pytest.fixture(scope="module")
def setup():
    records = gen_pentagon_set(seed=21, n=3)
    sched = cosine_schedule(12)
    model, _ = train(
        build_model(tiny_cfg(), seed=9), records, sched,
        TrainConfig(steps=10, batch_size=3, seed=1, checkpoint_every=100),
    )
    return model, sched, records, build_corner_histogram(records)


class TestSample:
    def test_deterministic_rerun(self, setup):
        model, sched, records, hist = setup
        req = SampleRequest(graph=records[0].graph, boundary=records[0].plan.boundary,
                            guidance=1.0, num_samples=3, seed=4)
        a = sample(model, req, sched, hist)
        b = sample(model, req, sched, hist)
        for pa, pb in zip(a, b):
            for ra, rb in zip(pa.rooms, pb.rooms):
                assert (ra.polygon.as_array() == rb.polygon.as_array()).all()

    def test_output_structure(self, setup):
        model, sched, records, hist = setup
        req = SampleRequest(graph=records[0].graph, boundary=records[0].plan.boundary,
                            num_samples=2, seed=0)
        plans = sample(model, req, sched, hist)
        assert len(plans) == 2
        for plan in plans:
            assert len(plan.rooms) == 6
            assert plan.boundary is records[0].plan.boundary
            assert len(plan.rooms[0].polygon.corners) >= 3

    def test_explicit_corner_counts(self, setup):
        model, sched, records, _ = setup
        req = SampleRequest(graph=records[0].graph, boundary=None,
                            num_samples=1, seed=0, corner_counts=(5, 4, 4, 4, 4, 4))
        plan = sample(model, req, sched)[0]
        assert [len(r.polygon.corners) for r in plan.rooms] == [5, 4, 4, 4, 4, 4]

    def test_unresolved_counts(self, setup):
        model, sched, records, _ = setup
        req = SampleRequest(graph=records[0].graph, num_samples=1, seed=0)
        with pytest.raises(ValidationError, match="corner counts"):
            sample(model, req, sched, hist=None)

    def test_lambda_one_skips_unconditional(self, setup):
        model, sched, records, hist = setup
        calls = []
        original = model.forward

        def counting(*args, **kwargs):
            calls.append(kwargs.get("bcoords") is not None)
            return original(*args, **kwargs)

        model.forward = counting
        try:
            req = SampleRequest(graph=records[0].graph, boundary=records[0].plan.boundary,
                                guidance=1.0, num_samples=1, seed=0)
            sample(model, req, sched, hist)
            assert all(calls)  # only the boundary-conditional branch ran
            assert len(calls) == sched.T

            calls.clear()
            req_half = SampleRequest(graph=records[0].graph, boundary=records[0].plan.boundary,
                                     guidance=0.5, num_samples=1, seed=0)
            sample(model, req_half, sched, hist)
            assert len(calls) == 2 * sched.T  # both branches each step
        finally:
            model.forward = original

    def test_no_boundary_unconditional_only(self, setup):
        model, sched, records, hist = setup
        calls = []
        original = model.forward

        def counting(*args, **kwargs):
            calls.append(kwargs.get("bcoords") is not None)
            return original(*args, **kwargs)

        model.forward = counting
        try:
            req = SampleRequest(graph=records[0].graph, boundary=None,
                                guidance=1.0, num_samples=1, seed=0)
            sample(model, req, sched, hist)
            assert not any(calls)
            assert len(calls) == sched.T
        finally:
            model.forward = original

    def test_padded_slots_zero(self, setup):
        model, sched, records, hist = setup
        req = SampleRequest(graph=records[0].graph, boundary=records[0].plan.boundary,
                            num_samples=1, seed=3)
        plan = sample(model, req, sched, hist)[0]
        # decode uses only real slots; verify through the room corner counts
        assert all(len(r.polygon.corners) <= 8 for r in plan.rooms)

    def test_per_sample_seed_stability(self, setup):
        model, sched, records, hist = setup
        req2 = SampleRequest(graph=records[0].graph, boundary=records[0].plan.boundary,
                             num_samples=2, seed=4)
        req3 = SampleRequest(graph=records[0].graph, boundary=records[0].plan.boundary,
                             num_samples=3, seed=4)
        a = sample(model, req2, sched, hist)
        b = sample(model, req3, sched, hist)
        # first two samples identical: per-sample seeds derive from seed+index
        for pa, pb in zip(a, b[:2]):
            for ra, rb in zip(pa.rooms, pb.rooms):
                assert (ra.polygon.as_array() == rb.polygon.as_array()).all()

    def test_nan_model_raises_numeric(self, setup):
        model, sched, records, hist = setup
        import copy

        bad = copy.deepcopy(model)
        with torch.no_grad():
            bad.input_proj.weight.fill_(float("nan"))
        req = SampleRequest(graph=records[0].graph, boundary=None, num_samples=1, seed=0)
        with pytest.raises(NumericError):
            sample(bad, req, sched, hist)

    def test_graph_too_large(self, setup):
        model, sched, _, hist = setup
        graph = BubbleGraph(9, ("living",) * 9)
        req = SampleRequest(graph=graph, num_samples=1, seed=0,
                            corner_counts=(4,) * 9)
        with pytest.raises(ValidationError):
            sample(model, req, sched, hist)
