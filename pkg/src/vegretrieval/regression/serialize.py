"""JSON persistence for fitted models.

Floats are written with Python's shortest round-trip representation, so a
read/write cycle restores every array bit for bit. The GPR Cholesky factor is
recomputed from the stored inputs and hyperparameters on load.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import ConfigurationError, FormatError
from .common import OutputNorm
from .gpr import FitInfo, GPRMultiModel
from .kernels import KernelHyperparams, kernel_matrix, noisy_cholesky
from .krr import KRRModel
from .mlp import MLPModel

FORMAT_VERSION = 1


def _arr(a):
    return np.asarray(a, dtype=float).tolist()


def model_to_dict(model) -> dict:
    if isinstance(model, GPRMultiModel):
        d = {
            "kind": "gpr_multi",
            "hyperparams": model.hyperparams.to_dict(),
            "inputs": _arr(model.X),
            "alphas": _arr(model.alphas),
            "include_noise_variance": model.include_noise_variance,
        }
        if model.fit_info is not None:
            fi = model.fit_info
            d["fit_info"] = {"initial_cost": fi.initial_cost, "final_cost": fi.final_cost,
                             "n_evaluations": fi.n_evaluations, "converged": fi.converged}
    elif isinstance(model, KRRModel):
        d = {
            "kind": "krr_multi",
            "lengthscale": model.lengthscale,
            "ridge": model.ridge,
            "inputs": _arr(model.X),
            "weights": _arr(model.weights),
        }
    elif isinstance(model, MLPModel):
        d = {
            "kind": "mlp_multi",
            "weights": [_arr(w) for w in model.weights],
            "biases": [_arr(b) for b in model.biases],
            "input_norm": model.input_norm.to_dict(),
            "selection": model.selection,
        }
    else:
        raise ConfigurationError(f"cannot serialize {type(model).__name__}")
    d["format_version"] = FORMAT_VERSION
    d["outputs"] = list(model.outputs)
    d["output_norm"] = model.output_norm.to_dict()
    d["provenance"] = model.metadata
    return d


def model_from_dict(d: dict):
    if d.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported model format version {d.get('format_version')!r}")
    kind = d.get("kind")
    outputs = tuple(d["outputs"])
    norm = OutputNorm.from_dict(d["output_norm"])
    meta = d.get("provenance", {})
    if kind == "gpr_multi":
        h = KernelHyperparams.from_dict(d["hyperparams"])
        X = np.array(d["inputs"], dtype=float)
        L = noisy_cholesky(kernel_matrix(h, X), h.sigma_n)
        alphas = np.array(d["alphas"], dtype=float)
        model = GPRMultiModel(X, h, L, alphas, norm, outputs, d["include_noise_variance"], meta)
        if "fit_info" in d:
            model.fit_info = FitInfo(**d["fit_info"])
        return model
    if kind == "krr_multi":
        return KRRModel(np.array(d["inputs"], dtype=float), d["lengthscale"], d["ridge"],
                        np.array(d["weights"], dtype=float), norm, outputs, None, meta)
    if kind == "mlp_multi":
        return MLPModel([np.array(w, dtype=float) for w in d["weights"]],
                        [np.array(b, dtype=float) for b in d["biases"]],
                        OutputNorm.from_dict(d["input_norm"]), norm, outputs,
                        d.get("selection", {}), meta)
    raise FormatError(f"unknown model kind {kind!r}")


def dumps_model(model) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, allow_nan=False)


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    return model_from_dict(d)
