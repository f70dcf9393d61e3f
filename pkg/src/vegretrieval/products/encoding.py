"""Linear int16 quantization of product planes."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError

FILL_INT16 = -32768
QMAX = 32767

# per-variable scale for value and error planes; offsets are zero
SCALES = {"FVC": 1e-4, "FAPAR": 1e-4, "LAI": 1e-3}
K0_SCALE = 1e-4


def encode_plane(values, scale, offset=0.0, fill=FILL_INT16):
    """``round((v - offset) / scale)`` saturated to +-32767; NaN becomes ``fill``."""
    if not scale > 0:
        raise ConfigurationError("scale must be > 0")
    v = np.asarray(values, dtype=float)
    missing = ~np.isfinite(v)
    with np.errstate(invalid="ignore"):
        q = np.rint((np.where(missing, 0.0, v) - offset) / scale)
    q = np.clip(q, -QMAX, QMAX).astype(np.int16)
    q[missing] = fill
    return q


def decode_plane(q, scale, offset=0.0, fill=FILL_INT16):
    """Inverse of :func:`encode_plane`; fill values decode to NaN."""
    if not scale > 0:
        raise ConfigurationError("scale must be > 0")
    q = np.asarray(q)
    v = q.astype(float) * scale + offset
    return np.where(q == fill, np.nan, v)
