"""Inversion models: multi-output GPR plus KRR and MLP baselines."""

from .common import CLIP_RANGES, OutputNorm, Prediction
from .gpr import (FitInfo, GPRMultiModel, OptimizerConfig, build_gpr, fit_gpr,
                  fit_gpr_multi, global_cost, nlml, predict_gpr, predict_mean_raw)
from .kernels import KernelHyperparams, kernel_eval, kernel_matrix
from .krr import KRRGridConfig, KRRModel, build_krr, fit_krr, fit_krr_multi, predict_krr
from .metrics import FitReport, evaluate_model, evaluate_predictions, predict
from .mlp import MLPGridConfig, MLPModel, fit_mlp, fit_mlp_multi, predict_mlp
from .serialize import dumps_model, load_model, model_from_dict, model_to_dict, save_model
