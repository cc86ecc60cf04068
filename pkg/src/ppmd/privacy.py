"""Laplace noise generation and injection.

The noise model is additive double-exponential noise with density
``1/(2*scale) * exp(-|x|/scale)``, sampled by inverse-CDF so that individual
draws can be forced through known quantiles in tests and every draw is
deterministic for a fixed seed. The default configuration is Lap(0, 1) per
cell; an optional privacy-budget mode derives the scale as sensitivity/epsilon
per attribute instead.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset
from .errors import EncodingError
from .partition import PartitionedDataset, recombine

UNIT = "unit"
RANGE = "per-attribute-range"
SUPPLIED = "user-supplied"


def laplace_density(x, scale: float):
    """Density of the zero-centred Laplace distribution with the given scale."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(-np.abs(x) / scale) / (2.0 * scale)
    return float(out) if out.ndim == 0 else out


def laplace_cdf(x, scale: float):
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x < 0, 0.5 * np.exp(x / scale), 1.0 - 0.5 * np.exp(-x / scale))
    return float(out) if out.ndim == 0 else out


def laplace_from_uniform(u, scale: float):
    """Map u in (-0.5, 0.5) through the Laplace quantile function:
    -scale * sgn(u) * ln(1 - 2|u|). u = 0 yields the median 0."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    u = np.asarray(u, dtype=np.float64)
    if np.any(np.abs(u) >= 0.5):
        raise ValueError("u must lie strictly inside (-0.5, 0.5)")
    out = -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    return float(out) if out.ndim == 0 else out


def sample_laplace(scale: float, rng: np.random.Generator, size=None):
    """Inverse-CDF Laplace sampling from an explicit generator stream."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    u = rng.random(size) - 0.5  # [-0.5, 0.5); clamp the single excluded endpoint
    u = np.where(u == -0.5, -0.5 + np.finfo(np.float64).tiny, u)
    out = -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class NoiseConfig:
    """How to draw the per-cell noise.

    Without ``epsilon`` every cell uses Lap(0, scale). With ``epsilon`` set,
    the per-attribute scale becomes sensitivity/epsilon, where the sensitivity
    is 1.0 (``unit``), the attribute's observed value range
    (``per-attribute-range``), or caller-provided (``user-supplied``, scalar
    or one value per sensitive column). ``enabled=False`` turns noise off
    entirely (the zero-noise limit).
    """

    scale: float = 1.0
    epsilon: float | None = None
    sensitivity_mode: str = UNIT
    sensitivity: float | tuple[float, ...] | None = None
    seed: int = 0
    enabled: bool = True

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.sensitivity_mode not in (UNIT, RANGE, SUPPLIED):
            raise ValueError(f"unknown sensitivity mode {self.sensitivity_mode!r}")
        if self.sensitivity_mode == SUPPLIED and self.epsilon is not None and self.sensitivity is None:
            raise ValueError("user-supplied sensitivity mode needs a sensitivity value")

    def effective_scales(self, sensitive: np.ndarray) -> np.ndarray:
        """Per-column scale actually applied to a sensitive matrix. A zero
        sensitivity (constant column under range mode) yields scale 0, i.e.
        that column is left unperturbed."""
        n_cols = sensitive.shape[1]
        if self.epsilon is None:
            return np.full(n_cols, float(self.scale))
        if self.sensitivity_mode == UNIT:
            delta = np.ones(n_cols)
        elif self.sensitivity_mode == RANGE:
            if sensitive.shape[0] == 0:
                delta = np.zeros(n_cols)
            else:
                delta = sensitive.max(axis=0) - sensitive.min(axis=0)
        else:
            delta = np.asarray(self.sensitivity, dtype=np.float64)
            if delta.ndim == 0:
                delta = np.full(n_cols, float(delta))
            if delta.shape != (n_cols,):
                raise ValueError(
                    f"need one sensitivity per column ({n_cols}), got shape {delta.shape}"
                )
        return delta / self.epsilon

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "epsilon": self.epsilon,
            "sensitivity_mode": self.sensitivity_mode,
            "sensitivity": list(self.sensitivity)
            if isinstance(self.sensitivity, tuple)
            else self.sensitivity,
            "seed": self.seed,
            "enabled": self.enabled,
        }

    @staticmethod
    def from_dict(d: dict) -> "NoiseConfig":
        sens = d.get("sensitivity")
        if isinstance(sens, list):
            sens = tuple(float(v) for v in sens)
        return NoiseConfig(
            scale=float(d.get("scale", 1.0)),
            epsilon=None if d.get("epsilon") is None else float(d["epsilon"]),
            sensitivity_mode=d.get("sensitivity_mode", UNIT),
            sensitivity=sens,
            seed=int(d.get("seed", 0)),
            enabled=bool(d.get("enabled", True)),
        )


@dataclass(frozen=True)
class NoiseRecord:
    """The noise actually applied, cell-aligned with the sensitive part.

    This is owner-side bookkeeping: it permits exact reversal and leakage
    auditing, and must never be included in anything sent to the service
    provider.
    """

    noise: np.ndarray
    scales: np.ndarray
    config: NoiseConfig

    @property
    def seed(self) -> int:
        return self.config.seed


@dataclass
class SanitizedDataset:
    """Recombined dataset with noised sensitive cells, plus the private log."""

    data: Dataset
    noise_log: NoiseRecord
    partition: PartitionedDataset


def inject_noise(sensitive: np.ndarray, config: NoiseConfig) -> tuple[np.ndarray, NoiseRecord]:
    """Add per-cell Laplace noise to a sensitive matrix.

    The matrix must already be numerically encoded; integer-coded categorical
    cells are perturbed like any other number and are not re-rounded.
    """
    sensitive = np.asarray(sensitive)
    if not np.issubdtype(sensitive.dtype, np.number):
        raise EncodingError(
            f"sensitive cells must be numerically encoded, got dtype {sensitive.dtype}"
        )
    sensitive = sensitive.astype(np.float64, copy=False)
    if sensitive.ndim != 2:
        raise ValueError(f"expected a 2-d sensitive matrix, got shape {sensitive.shape}")

    if not config.enabled:
        noise = np.zeros_like(sensitive)
        scales = np.zeros(sensitive.shape[1])
    else:
        scales = config.effective_scales(sensitive)
        rng = np.random.default_rng(config.seed)
        unit = sample_laplace(1.0, rng, size=sensitive.shape)
        noise = unit * scales[np.newaxis, :]
    record = NoiseRecord(noise=noise, scales=scales, config=config)
    return sensitive + noise, record


def sanitize(noisy_sensitive: np.ndarray, pd: PartitionedDataset) -> Dataset:
    """Recombine a noised sensitive part with its untouched counterpart; the
    non-sensitive cells of the result are bit-identical to the originals."""
    return recombine(pd, sensitive=noisy_sensitive)


def sanitize_partition(pd: PartitionedDataset, config: NoiseConfig) -> SanitizedDataset:
    """Partition-level convenience: inject noise and recombine in one step."""
    noisy, record = inject_noise(pd.sensitive, config)
    return SanitizedDataset(data=sanitize(noisy, pd), noise_log=record, partition=pd)


def redraw(sanitized: SanitizedDataset, seed: int) -> SanitizedDataset:
    """Re-sample the noise under a new seed (per-query noise refresh)."""
    cfg = replace(sanitized.noise_log.config, seed=seed)
    return sanitize_partition(sanitized.partition, cfg)
