import numpy as np
import pytest
import torch
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from planforge.dataset import gen_pentagon_set
from planforge.errors import ValidationError
from planforge.estimator import FloorplanDiffusion


def tiny_estimator(**kw):
    params = dict(
        d_model=16, num_heads=2, num_blocks=1, coord_bins=32,
        discrete_threshold=2, timesteps=12, steps=10, batch_size=3,
        checkpoint_every=100, seed=5,
    )
    params.update(kw)
    return FloorplanDiffusion(**params)


@pytest.fixture(scope="module")
def records():
    return gen_pentagon_set(seed=31, n=3)


@pytest.fixture(scope="module")
def fitted(records):
    return tiny_estimator().fit(records)


class TestEstimatorApi:
    def test_get_set_params_round_trip(self):
        est = tiny_estimator()
        params = est.get_params()
        assert params["d_model"] == 16
        est.set_params(steps=42)
        assert est.steps == 42

    def test_sklearn_clone(self):
        est = tiny_estimator()
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_not_fitted_guard(self, records):
        est = tiny_estimator()
        with pytest.raises(NotFittedError):
            est.sample(records[0].graph, n_samples=1)

    def test_fit_sets_state(self, fitted):
        assert hasattr(fitted, "model_")
        assert hasattr(fitted, "schedule_")
        assert hasattr(fitted, "histogram_")
        assert len(fitted.loss_log_) == 10

    def test_sample_accepts_wire_graph(self, fitted):
        plans = fitted.sample(
            {"room_types": ["living", "kitchen"], "edges": [[0, 1, 1]]},
            n_samples=1,
            corner_counts=[4, 4],
        )
        assert len(plans) == 1
        assert plans[0].rooms[0].room_type == "living"

    def test_guidance_validated(self, fitted, records):
        with pytest.raises(ValidationError):
            fitted.sample(records[0].graph, guidance=2.0)

    def test_empty_fit_rejected(self):
        with pytest.raises(ValidationError):
            tiny_estimator().fit([])


class TestEstimatorPersistence:
    def test_save_load_same_samples(self, fitted, records, tmp_path):
        fitted.save(tmp_path / "ck")
        loaded = FloorplanDiffusion.load(tmp_path / "ck")
        req = dict(boundary=records[0].plan.boundary, n_samples=2, seed=3)
        a = fitted.sample(records[0].graph, **req)
        b = loaded.sample(records[0].graph, **req)
        for pa, pb in zip(a, b):
            for ra, rb in zip(pa.rooms, pb.rooms):
                assert (ra.polygon.as_array() == rb.polygon.as_array()).all()

    def test_load_restores_params(self, fitted, tmp_path):
        fitted.save(tmp_path / "ck2")
        loaded = FloorplanDiffusion.load(tmp_path / "ck2")
        assert loaded.get_params() == fitted.get_params()


class TestFineTuneApi:
    def test_zero_shot_identity(self, records):
        est = tiny_estimator().fit(records)
        before = {n: p.clone() for n, p in est.model_.named_parameters()}
        est.fine_tune(records, shots=0)
        for n, p in est.model_.named_parameters():
            assert torch.equal(before[n], p)

    def test_few_shot_changes_model(self, records):
        est = tiny_estimator().fit(records)
        before = {n: p.clone() for n, p in est.model_.named_parameters()}
        est.fine_tune(records, shots=2, steps=5)
        changed = any(
            not torch.equal(before[n], p) for n, p in est.model_.named_parameters()
        )
        assert changed
