"""Held-out evaluation of any of the regressors."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .. import VARIABLES
from ..errors import ConfigurationError
from .common import Prediction, clip_outputs
from .gpr import GPRMultiModel, predict_gpr
from .krr import KRRModel, predict_krr
from .mlp import MLPModel, predict_mlp


@dataclass
class OutputMetrics:
    rmse: float
    bias: float
    r2: float


@dataclass
class FitReport:
    method: str
    n_samples: int
    metrics: dict = field(default_factory=dict)  # variable -> OutputMetrics
    global_cost: float | None = None
    initial_cost: float | None = None
    n_evaluations: int | None = None
    converged: bool | None = None
    selection: dict | None = None

    def to_dict(self):
        d = asdict(self)
        d["metrics"] = {k: asdict(v) for k, v in self.metrics.items()}
        return d


def method_name(model):
    if isinstance(model, GPRMultiModel):
        return "gpr"
    if isinstance(model, KRRModel):
        return "krr"
    if isinstance(model, MLPModel):
        return "mlp"
    return type(model).__name__


def predict(model, X) -> Prediction:
    """Clipped predictions from any supported model.

    Other objects are accepted if they expose ``predict(X) -> (n, 3)``.
    """
    if isinstance(model, GPRMultiModel):
        return predict_gpr(model, X)
    if isinstance(model, KRRModel):
        return predict_krr(model, X)
    if isinstance(model, MLPModel):
        return predict_mlp(model, X)
    raw = np.asarray(model.predict(np.atleast_2d(X)), dtype=float)
    mean, clipped = clip_outputs(raw)
    return Prediction(mean, clipped, raw)


def output_metrics(pred, truth):
    err = pred - truth
    ss_res = float(np.sum(err**2))
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res == 0 else -np.inf
    return OutputMetrics(float(np.sqrt(np.mean(err**2))), float(np.mean(err)), r2)


def evaluate_predictions(pred, truths, method="unknown", outputs=VARIABLES) -> FitReport:
    pred = np.asarray(pred, dtype=float)
    truths = np.asarray(truths, dtype=float)
    if truths.shape[0] == 0:
        raise ConfigurationError("cannot evaluate on an empty test set")
    metrics = {name: output_metrics(pred[:, o], truths[:, o]) for o, name in enumerate(outputs)}
    return FitReport(method, truths.shape[0], metrics)


def evaluate_model(model, test) -> FitReport:
    if len(test) == 0:
        raise ConfigurationError("cannot evaluate on an empty test set")
    report = evaluate_predictions(predict(model, test.reflectance).mean, test.truths,
                                  method_name(model))
    info = getattr(model, "fit_info", None)
    if info is not None:
        report.global_cost = info.final_cost
        report.initial_cost = info.initial_cost
        report.n_evaluations = info.n_evaluations
        report.converged = info.converged
    if isinstance(model, MLPModel):
        report.selection = dict(model.selection)
    elif isinstance(model, KRRModel):
        report.selection = {"lengthscale": model.lengthscale, "ridge": model.ridge}
        if model.cv_scores is not None:
            report.global_cost = float(model.cv_scores.min())
    elif isinstance(model, GPRMultiModel):
        report.selection = model.hyperparams.to_dict()
    return report
