"""Transferability metrics for pretrained checkpoints."""

from __future__ import annotations

import json
from typing import Any

from ._core import (
    hscore,
    kendall_tau,
    leep,
    linear,
    linear_valid,
    load_tensor,
    logme,
    nce,
    nleep,
    pactran_dirichlet,
    pactran_gamma,
    pactran_gaussian,
    save_int_vector,
    save_matrix,
)
from . import _core

__all__ = [
    "evaluate_ranking",
    "generate_synthetic",
    "hscore",
    "kendall_tau",
    "leep",
    "linear",
    "linear_valid",
    "load_tensor",
    "logme",
    "nce",
    "nleep",
    "pactran_dirichlet",
    "pactran_gamma",
    "pactran_gaussian",
    "run_metrics",
    "save_int_vector",
    "save_matrix",
]


def run_metrics(manifest_path: str, config: dict[str, Any] | None = None) -> dict[str, Any]:
    """Compute every configured metric for a checkpoint manifest."""
    return json.loads(_core.run_metrics_json(str(manifest_path), json.dumps(config or {})))


def evaluate_ranking(report: dict[str, Any], manifest_path: str) -> dict[str, Any]:
    """Score a report's rankings against the manifest's test errors."""
    return json.loads(_core.evaluate_json(json.dumps(report), str(manifest_path)))


def generate_synthetic(out_dir: str, spec: dict[str, Any] | None = None) -> dict[str, Any]:
    """Generate a synthetic checkpoint benchmark under out_dir."""
    return json.loads(_core.generate_synthetic_json(json.dumps(spec or {}), str(out_dir)))
