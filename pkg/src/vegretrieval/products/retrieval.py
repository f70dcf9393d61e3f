"""Pixel-wise retrieval over a k0 tile with recursive age compositing."""

from __future__ import annotations

import numpy as np

from .. import VARIABLES
from ..errors import ConfigurationError
from ..regression.gpr import GPRMultiModel, predict_gpr
from ..uncertainty import (DEFAULT_SIGMA_K0, InputErrorSpec, classify_quality,
                           propagate_input_error, total_error)
from .encoding import FILL_INT16, SCALES, decode_plane, encode_plane
from .tiles import (AGE_FILL, AGE_MAX, AGE_STEP, QC_CARRIED, QC_CLIPPED, QC_UNPROCESSED,
                    InputTile, ProductTile)

K0_VALID_RANGE = (-0.2, 1.2)


def valid_input_mask(tile: InputTile):
    """Pixels whose three bands are all present and inside the validity window."""
    refl = tile.reflectances()
    lo, hi = K0_VALID_RANGE
    with np.errstate(invalid="ignore"):
        ok = np.isfinite(refl) & (refl >= lo) & (refl <= hi)
    return ok.all(axis=0)


def _pixel_sigmas(tile: InputTile, errors: InputErrorSpec | None):
    """(rows*cols, 3) band sigmas; missing per-pixel sigma falls back to the default."""
    n = tile.grid.rows * tile.grid.cols
    if errors is not None:
        return errors.as_columns(n)
    planes = tile.sigmas()
    if planes is None:
        return np.full((n, 3), DEFAULT_SIGMA_K0)
    sig = planes.reshape(3, n).T
    return np.where(np.isfinite(sig) & (sig >= 0), sig, DEFAULT_SIGMA_K0)


def retrieve_pixels(model: GPRMultiModel, X, sigma_k0):
    """Clipped means, clipped flags and total errors for ``(n, 3)`` reflectances."""
    pred = predict_gpr(model, X)
    spec = InputErrorSpec(sigma_k0[:, 0], sigma_k0[:, 1], sigma_k0[:, 2])
    prop = propagate_input_error(model, X, spec)
    return pred.mean, pred.clipped, total_error(pred.sigma, prop)


def retrieve_tile(model: GPRMultiModel, tile: InputTile, errors: InputErrorSpec | None = None,
                  previous=None, timeslot=None, chunk_size=4096):
    """Retrieve LAI, FVC and FAPAR tiles from one input tile.

    ``previous`` maps variable name to the preceding :class:`ProductTile`.
    Pixels without a valid input inherit the previous value and error with
    the carried bit set and age advanced by 10 days (capped at 250); pixels
    with neither are left unprocessed. Returns a dict keyed by variable.
    """
    grid = tile.grid
    timeslot = tile.timeslot if timeslot is None else timeslot
    previous = previous or {}
    for var, prev in previous.items():
        if prev.grid != grid:
            raise ConfigurationError(f"previous {var} tile grid does not match the input grid")
        if prev.variable != var:
            raise ConfigurationError(f"previous tile for {var} holds {prev.variable}")
    if tuple(model.outputs) != VARIABLES:
        raise ConfigurationError(f"model outputs {model.outputs} are not {VARIABLES}")

    n = grid.rows * grid.cols
    valid = valid_input_mask(tile).ravel()
    X = tile.reflectances().reshape(3, n).T
    sigma_k0 = _pixel_sigmas(tile, errors)

    idx = np.flatnonzero(valid)
    means = np.empty((idx.size, 3))
    clipped = np.zeros((idx.size, 3), dtype=bool)
    errs = np.empty((idx.size, 3))
    for start in range(0, idx.size, chunk_size):
        sl = slice(start, start + chunk_size)
        means[sl], clipped[sl], errs[sl] = retrieve_pixels(model, X[idx[sl]], sigma_k0[idx[sl]])

    out = {}
    for o, var in enumerate(VARIABLES):
        scale = SCALES[var]
        value = np.full(n, FILL_INT16, np.int16)
        error = np.full(n, FILL_INT16, np.int16)
        qc = np.full(n, QC_UNPROCESSED, np.uint8)
        age = np.full(n, AGE_FILL, np.uint8)

        value[idx] = encode_plane(means[:, o], scale)
        error[idx] = encode_plane(errs[:, o], scale)
        qc[idx] = classify_quality(var, errs[:, o]) | np.where(clipped[:, o], QC_CLIPPED, 0)
        age[idx] = 0

        prev = previous.get(var)
        if prev is not None:
            pv = prev.value.ravel()
            carry = ~valid & (pv != FILL_INT16)
            value[carry] = pv[carry]
            error[carry] = prev.error.ravel()[carry]
            prev_err = decode_plane(error[carry], scale)
            qc[carry] = (classify_quality(var, prev_err) | QC_CARRIED
                         | (prev.qc.ravel()[carry] & QC_CLIPPED))
            age[carry] = np.minimum(prev.age.ravel()[carry].astype(int) + AGE_STEP, AGE_MAX)

        out[var] = ProductTile(grid, var, timeslot, value.reshape(grid.shape),
                               error.reshape(grid.shape), qc.reshape(grid.shape),
                               age.reshape(grid.shape))
    return out
