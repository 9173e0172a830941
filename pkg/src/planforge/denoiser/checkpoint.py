"""Checkpoint persistence: a manifest plus one raw little-endian float32
blob per named parameter tensor, digest-verified on load."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Optional

import numpy as np
import torch

from ..errors import CheckpointError, ConfigMismatchError
from .config import ModelConfig
from .network import Denoiser, build_model

FORMAT = "planforge-checkpoint-v1"


def _tensor_bytes(t: torch.Tensor) -> bytes:
    arr = t.detach().cpu().numpy().astype("<f4")
    return arr.tobytes()


def _digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def checkpoint_digest(path) -> str:
    """Overall digest recorded in a checkpoint manifest."""
    manifest = json.loads((Path(path) / "manifest.json").read_text())
    return manifest["digest"]


def save_checkpoint(
    model: Denoiser, path, step: int = 0, extra: Optional[dict] = None
) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    tensors = {}
    rolling = hashlib.sha256()
    for name, param in sorted(model.named_parameters()):
        blob = _tensor_bytes(param)
        (path / f"{name}.bin").write_bytes(blob)
        d = _digest(blob)
        tensors[name] = {
            "shape": list(param.shape),
            "dtype": "float32",
            "digest": d,
        }
        rolling.update(d.encode())
    manifest = {
        "format": FORMAT,
        "config": model.cfg.to_dict(),
        "step": step,
        "extra": extra or {},
        "tensors": tensors,
        "digest": "sha256:" + rolling.hexdigest(),
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return path


def load_checkpoint(
    path, expect_config: Optional[ModelConfig] = None, dtype=torch.float32
) -> tuple[Denoiser, dict]:
    """Rebuild a model from a checkpoint directory.

    Raises CheckpointError on truncation or digest mismatch (never returns a
    partial model) and ConfigMismatchError when the stored configuration
    differs from `expect_config`.
    """
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise CheckpointError(f"no manifest.json under {path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"unreadable manifest: {exc}") from exc
    if manifest.get("format") != FORMAT:
        raise CheckpointError(f"unknown checkpoint format {manifest.get('format')!r}")
    cfg = ModelConfig.from_dict(manifest["config"])
    if expect_config is not None and cfg != expect_config:
        raise ConfigMismatchError(
            f"checkpoint config {cfg} does not match expected {expect_config}"
        )
    model = build_model(cfg, seed=0, dtype=dtype)
    state = dict(model.named_parameters())
    if set(state) != set(manifest["tensors"]):
        raise CheckpointError("tensor table does not match model parameters")
    loaded = {}
    rolling = hashlib.sha256()
    for name in sorted(manifest["tensors"]):
        meta = manifest["tensors"][name]
        blob_path = path / f"{name}.bin"
        if not blob_path.exists():
            raise CheckpointError(f"missing tensor blob {blob_path.name}")
        blob = blob_path.read_bytes()
        if _digest(blob) != meta["digest"]:
            raise CheckpointError(f"digest mismatch for tensor {name}")
        rolling.update(meta["digest"].encode())
        shape = tuple(meta["shape"])
        expected = int(np.prod(shape)) * 4 if shape else 4
        if len(blob) != expected:
            raise CheckpointError(f"truncated blob for tensor {name}")
        arr = np.frombuffer(blob, dtype="<f4").reshape(shape)
        ten = torch.as_tensor(arr.copy()).to(dtype)
        if not torch.isfinite(ten).all():
            raise CheckpointError(f"non-finite values in tensor {name}")
        loaded[name] = ten
    if "sha256:" + rolling.hexdigest() != manifest["digest"]:
        raise CheckpointError("overall checkpoint digest mismatch")
    with torch.no_grad():
        for name, ten in loaded.items():
            state[name].copy_(ten)
    return model, manifest
