"""Synthetic k0 tiles built from the forward model, for end-to-end checks."""

from __future__ import annotations

import numpy as np

from ..rtm_sim import NoiseSpec, SamplingConfig, build_training_set
from .encoding import FILL_INT16, K0_SCALE, encode_plane
from .tiles import InputTile


def synthetic_input_tile(grid, timeslot, sampling: SamplingConfig, noise: NoiseSpec,
                         missing_fraction=0.0, seed=None):
    """Input tile whose pixels are independent simulated canopies.

    Returns the tile and the ``(3, rows, cols)`` true (LAI, FVC, FAPAR).
    A ``missing_fraction`` of pixels, chosen with ``seed``, is set to fill.
    """
    n = grid.rows * grid.cols
    config = SamplingConfig(**{**sampling.to_dict(), "n_samples": n,
                               **({"rng_seed": seed} if seed is not None else {})})
    ts = build_training_set(config, noise)
    k0 = encode_plane(ts.reflectance.T.reshape(3, *grid.shape), K0_SCALE)
    if missing_fraction > 0:
        rng = np.random.default_rng([config.rng_seed, 1])
        drop = rng.random(grid.shape) < missing_fraction
        k0[:, drop] = FILL_INT16
    truths = ts.truths.T.reshape(3, *grid.shape)
    return InputTile(grid, timeslot, k0), truths
