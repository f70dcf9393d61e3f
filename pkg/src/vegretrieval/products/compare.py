"""Product intercomparison and QC coverage statistics."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigurationError
from ..uncertainty import QualityClass
from .tiles import ProductTile

# agreement envelope matching the good-quality error level
ENVELOPE = {"FVC": 0.1, "FAPAR": 0.1, "LAI": 1.0}


@dataclass
class CompareReport:
    variable: str
    n: int
    bias: float | None = None
    rmsd: float | None = None
    r: float | None = None
    r2: float | None = None
    envelope_fraction: float | None = None

    def to_dict(self):
        return asdict(self)


def intercompare(a: ProductTile, b: ProductTile,
                 max_class: QualityClass = QualityClass.UNRELIABLE) -> CompareReport:
    """Statistics of ``a - b`` over pixels both tiles hold at quality ``<= max_class``."""
    if a.variable != b.variable:
        raise ConfigurationError(f"cannot compare {a.variable} with {b.variable}")
    if a.grid != b.grid:
        raise ConfigurationError("tiles are on different grids")
    max_class = QualityClass(max_class)
    if max_class == QualityClass.UNPROCESSED:
        max_class = QualityClass.UNRELIABLE
    va, vb = a.values(), b.values()
    mask = ((a.quality() <= max_class) & (b.quality() <= max_class)
            & np.isfinite(va) & np.isfinite(vb))
    n = int(mask.sum())
    report = CompareReport(a.variable, n)
    if n == 0:
        return report
    x, y = va[mask], vb[mask]
    diff = x - y
    report.bias = float(np.mean(diff))
    report.rmsd = float(np.sqrt(np.mean(diff**2)))
    # tolerance absorbs the quantization step when testing envelope membership
    report.envelope_fraction = float(np.mean(np.abs(diff) <= ENVELOPE[a.variable] + 1e-9))
    if n >= 2 and np.std(x) > 0 and np.std(y) > 0:
        r = float(np.corrcoef(x, y)[0, 1])
        report.r = r
        report.r2 = r * r
    return report


def qc_summary(tile: ProductTile) -> dict:
    """Percentage of pixels per quality class, unprocessed included."""
    codes = tile.quality().ravel()
    counts = np.bincount(codes, minlength=len(QualityClass))
    total = codes.size
    return {cls.name.lower(): 100.0 * counts[cls] / total for cls in QualityClass}
