"""Simulation database for the hybrid retrieval.

Canopy states are sampled from broad prior distributions, pushed through a
two-stream / Beer-law canopy reflectance model in the three AVHRR channels
(C1 red 0.63 um, C2 NIR 0.87 um, C3 MIR 1.61 um) and perturbed with
band-wise white Gaussian noise before being used as regression inputs.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import ConfigurationError

BANDS = ("red", "nir", "mir")
# soil spectral shape relative to the red brightness
SOIL_BAND_FACTORS = (1.00, 1.25, 1.40)
SOIL_MAX_REFLECTANCE = 0.95
VIEW_EXTINCTION = 0.5
LAI_MAX = 8.0

CSV_HEADER = (
    "c1_red", "c2_nir", "c3_mir",
    "c1_red_clean", "c2_nir_clean", "c3_mir_clean",
    "lai", "fvc", "fapar",
    "omega_red", "omega_nir", "omega_mir", "soil_brightness", "theta_s_deg",
)


@dataclass(frozen=True)
class CanopyState:
    lai: float
    omega_red: float
    omega_nir: float
    omega_mir: float
    soil_brightness: float
    theta_s: float  # degrees

    @property
    def omegas(self):
        return (self.omega_red, self.omega_nir, self.omega_mir)

    def as_tuple(self):
        return (self.lai, self.omega_red, self.omega_nir, self.omega_mir,
                self.soil_brightness, self.theta_s)


@dataclass(frozen=True)
class BandReflectance:
    c1_red: float
    c2_nir: float
    c3_mir: float

    def as_array(self):
        return np.array([self.c1_red, self.c2_nir, self.c3_mir])


@dataclass(frozen=True)
class TruthTriple:
    lai: float
    fvc: float
    fapar: float

    def as_array(self):
        return np.array([self.lai, self.fvc, self.fapar])


@dataclass(frozen=True)
class NoiseSpec:
    """Per-band standard deviation of the additive reflectance noise."""

    sigma_red: float = 0.015
    sigma_nir: float = 0.015
    sigma_mir: float = 0.015

    def __post_init__(self):
        for name in ("sigma_red", "sigma_nir", "sigma_mir"):
            value = getattr(self, name)
            if not (value >= 0.0) or not math.isfinite(value):
                raise ConfigurationError(f"{name} must be a finite value >= 0, got {value!r}")

    @classmethod
    def uniform(cls, sigma):
        return cls(sigma, sigma, sigma)

    def as_array(self):
        return np.array([self.sigma_red, self.sigma_nir, self.sigma_mir])


@dataclass(frozen=True)
class SamplingConfig:
    n_samples: int = 2048
    bare_soil_fraction: float = 0.10
    lai_lognormal_mu: float = 0.35
    lai_lognormal_sigma: float = 0.85
    omega_red_range: tuple = (0.08, 0.25)
    omega_nir_range: tuple = (0.75, 0.95)
    omega_mir_range: tuple = (0.30, 0.65)
    soil_brightness_range: tuple = (0.05, 0.45)
    theta_s_range: tuple = (20.0, 60.0)
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ConfigurationError(f"n_samples must be an integer >= 1, got {self.n_samples!r}")
        if not 0.0 <= self.bare_soil_fraction <= 1.0:
            raise ConfigurationError("bare_soil_fraction must lie in [0, 1]")
        if not (self.lai_lognormal_sigma >= 0.0):
            raise ConfigurationError("lai_lognormal_sigma must be >= 0")
        if not math.isfinite(self.lai_lognormal_mu):
            raise ConfigurationError("lai_lognormal_mu must be finite")
        if int(self.rng_seed) != self.rng_seed or self.rng_seed < 0 or self.rng_seed >= 2**64:
            raise ConfigurationError("rng_seed must be an unsigned 64-bit integer")
        limits = {
            "omega_red_range": (0.0, 1.0, False),
            "omega_nir_range": (0.0, 1.0, False),
            "omega_mir_range": (0.0, 1.0, False),
            "soil_brightness_range": (0.05, 0.45, True),
            "theta_s_range": (20.0, 60.0, True),
        }
        for name, (lo_lim, hi_lim, closed) in limits.items():
            lo, hi = getattr(self, name)
            object.__setattr__(self, name, (float(lo), float(hi)))
            if lo > hi:
                raise ConfigurationError(f"{name} is reversed: ({lo}, {hi})")
            inside = (lo_lim <= lo and hi <= hi_lim) if closed else (lo_lim < lo and hi < hi_lim)
            if not inside:
                raise ConfigurationError(f"{name} ({lo}, {hi}) outside allowed ({lo_lim}, {hi_lim})")
        if self.omega_red_range[1] >= self.omega_nir_range[0]:
            raise ConfigurationError("omega_red_range must lie strictly below omega_nir_range")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown sampling keys: {sorted(unknown)}")
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kwargs)

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


@dataclass
class TrainingSet:
    """Columnar simulation database.

    ``reflectance`` holds the noised inputs, ``reflectance_clean`` the
    forward-model output, ``truths`` the (LAI, FVC, FAPAR) targets and
    ``states`` the canopy parameters in :data:`CanopyState` field order.
    """

    reflectance: np.ndarray
    reflectance_clean: np.ndarray
    truths: np.ndarray
    states: np.ndarray
    noise_spec: NoiseSpec | None = None
    seed: int | None = None

    def __len__(self):
        return self.reflectance.shape[0]

    def canopy_state(self, i):
        return CanopyState(*(float(v) for v in self.states[i]))

    def subset(self, idx):
        return TrainingSet(self.reflectance[idx], self.reflectance_clean[idx],
                           self.truths[idx], self.states[idx], self.noise_spec, self.seed)

    def with_reflectance(self, reflectance, noise_spec=None):
        return TrainingSet(np.asarray(reflectance, dtype=float), self.reflectance_clean,
                           self.truths, self.states, noise_spec, self.seed)


def record_stream(seed, index):
    """Independent generator for record ``index`` of a database seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def sample_canopy(config: SamplingConfig, stream: np.random.Generator) -> CanopyState:
    # every draw is consumed regardless of branch so downstream draws stay aligned
    u_bare = stream.random()
    lai = stream.lognormal(config.lai_lognormal_mu, config.lai_lognormal_sigma)
    omega_red = stream.uniform(*config.omega_red_range)
    omega_nir = stream.uniform(*config.omega_nir_range)
    omega_mir = stream.uniform(*config.omega_mir_range)
    soil = stream.uniform(*config.soil_brightness_range)
    theta_s = stream.uniform(*config.theta_s_range)
    lai = 0.0 if u_bare < config.bare_soil_fraction else min(LAI_MAX, float(lai))
    return CanopyState(lai, float(omega_red), float(omega_nir), float(omega_mir),
                       float(soil), float(theta_s))


def sun_extinction(theta_s):
    return 0.5 / math.cos(math.radians(theta_s))


def infinite_reflectance(omega):
    """Reflectance of a semi-infinite canopy with single-scattering albedo ``omega``."""
    s = math.sqrt(1.0 - omega)
    return (1.0 - s) / (1.0 + s)


def soil_reflectance(soil_brightness):
    return tuple(min(SOIL_MAX_REFLECTANCE, soil_brightness * c) for c in SOIL_BAND_FACTORS)


def simulate_reflectance(state: CanopyState) -> BandReflectance:
    k_s = sun_extinction(state.theta_s)
    t = math.exp(-(k_s + VIEW_EXTINCTION) * state.lai)
    out = []
    for omega, rho_soil in zip(state.omegas, soil_reflectance(state.soil_brightness)):
        rho_inf = infinite_reflectance(omega)
        out.append(rho_inf * (1.0 - t) + rho_soil * t)
    return BandReflectance(*out)


def compute_truths(state: CanopyState) -> TruthTriple:
    lai = state.lai
    fvc = -math.expm1(-0.5 * lai)
    k_s = sun_extinction(state.theta_s)
    fapar = (1.0 - infinite_reflectance(state.omega_red)) * -math.expm1(-k_s * lai)
    return TruthTriple(lai, fvc, fapar)


def add_noise(r: BandReflectance, spec: NoiseSpec, stream: np.random.Generator) -> BandReflectance:
    # noised values may leave [0, 1]; no clipping here
    draws = stream.standard_normal(3)
    sigmas = spec.as_array()
    if np.any(sigmas < 0):
        raise ConfigurationError("noise sigma must be >= 0")
    base = (r.c1_red, r.c2_nir, r.c3_mir)
    return BandReflectance(*(float(b + s * d) for b, s, d in zip(base, sigmas, draws)))


def build_training_set(config: SamplingConfig, spec: NoiseSpec) -> TrainingSet:
    n = config.n_samples
    noisy = np.empty((n, 3))
    clean = np.empty((n, 3))
    truths = np.empty((n, 3))
    states = np.empty((n, 6))
    for i in range(n):
        stream = record_stream(config.rng_seed, i)
        state = sample_canopy(config, stream)
        r = simulate_reflectance(state)
        clean[i] = (r.c1_red, r.c2_nir, r.c3_mir)
        noisy[i] = add_noise(r, spec, stream).as_array()
        t = compute_truths(state)
        truths[i] = (t.lai, t.fvc, t.fapar)
        states[i] = state.as_tuple()
    return TrainingSet(noisy, clean, truths, states, spec, config.rng_seed)


def load_config(path):
    """Read ``{"sampling": {...}, "noise": {...}}``; either section may be omitted.

    ``noise`` may also be a single number, applied to all three bands.
    """
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    unknown = set(data) - {"sampling", "noise"}
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    sampling = SamplingConfig.from_dict(data.get("sampling", {}))
    noise = data.get("noise", {})
    try:
        if isinstance(noise, (int, float)) and not isinstance(noise, bool):
            noise = NoiseSpec.uniform(float(noise))
        else:
            noise = NoiseSpec(**noise)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
    return sampling, noise


def write_training_csv(ts: TrainingSet, path):
    rows = np.hstack([ts.reflectance, ts.reflectance_clean, ts.truths, ts.states[:, 1:]])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for row in rows:
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")


def read_training_csv(path) -> TrainingSet:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ConfigurationError(f"{path}: unexpected CSV header {header!r}")
        try:
            rows = [[float(v) for v in row] for row in reader if row]
        except ValueError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
    if not rows:
        data = np.empty((0, len(CSV_HEADER)))
    else:
        data = np.array(rows)
        if data.shape[1] != len(CSV_HEADER):
            raise ConfigurationError(f"{path}: expected {len(CSV_HEADER)} columns")
    states = np.hstack([data[:, 6:7], data[:, 9:14]])
    return TrainingSet(data[:, 0:3].copy(), data[:, 3:6].copy(), data[:, 6:9].copy(), states)
