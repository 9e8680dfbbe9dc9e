"""Monte Carlo estimation of the concentration ratio.

Batched common-random-number design: each batch draws an (m, n) loss matrix
from its own deterministic substream, takes row sums, and estimates the
ratio of the sum's empirical quantile to n times the single-loss quantile
(either the model's exact quantile or an empirical quantile from an
independent companion block of n*m single losses drawn from the same
substream). Batch means give the point estimate; batch spread gives the
uncertainty band. Results are reproducible bit-for-bit for a fixed
configuration regardless of worker count, because every batch owns an
independent substream and results are assembled by batch index.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import approx
from .errors import DomainError, ResourceLimitError
from .models import LossModel

__all__ = [
    "DenominatorMode",
    "SimulationConfig",
    "ConcentrationCurve",
    "empirical_quantile",
    "empirical_concentration",
]


class DenominatorMode(str, enum.Enum):
    """How the single-loss quantile in the denominator is obtained."""

    EMPIRICAL = "empirical"
    EXACT = "exact"


@dataclass(frozen=True, slots=True)
class SimulationConfig:
    """Configuration of one Monte Carlo run.

    ``samples`` is the total number of sum observations, split evenly over
    ``batches`` (must divide). ``alpha_grid`` is a strictly increasing tuple
    of levels in (0, 1). ``max_bytes`` caps the estimated peak allocation;
    exceeding it raises :class:`ResourceLimitError` rather than thrashing.
    """

    n: int
    samples: int
    alpha_grid: tuple
    batches: int = 20
    seed: int = 42
    denominator: DenominatorMode = DenominatorMode.EMPIRICAL
    max_bytes: int = 4 << 30

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 2:
            raise DomainError(f"SimulationConfig: n must be an integer >= 2, got {self.n!r}")
        if isinstance(self.samples, bool) or not isinstance(self.samples, int) or self.samples < 1:
            raise DomainError("SimulationConfig: samples must be a positive integer")
        if isinstance(self.batches, bool) or not isinstance(self.batches, int) or self.batches < 1:
            raise DomainError("SimulationConfig: batches must be a positive integer")
        if self.samples % self.batches != 0:
            raise DomainError(
                f"SimulationConfig: batches ({self.batches}) must divide samples ({self.samples})"
            )
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise DomainError("SimulationConfig: seed must be a non-negative integer")
        if isinstance(self.max_bytes, bool) or not isinstance(self.max_bytes, int) or self.max_bytes <= 0:
            raise DomainError("SimulationConfig: max_bytes must be a positive integer")
        mode = self.denominator
        if isinstance(mode, str) and not isinstance(mode, DenominatorMode):
            mode = DenominatorMode(mode)
        object.__setattr__(self, "denominator", mode)
        grid = tuple(float(a) for a in self.alpha_grid)
        if not grid:
            raise DomainError("SimulationConfig: alpha_grid must be non-empty")
        if any(not (0.0 < a < 1.0) for a in grid):
            raise DomainError("SimulationConfig: alpha_grid values must lie in (0, 1)")
        if any(b <= a for a, b in zip(grid[:-1], grid[1:])):
            raise DomainError("SimulationConfig: alpha_grid must be strictly increasing")
        object.__setattr__(self, "alpha_grid", grid)


@dataclass(frozen=True, eq=False)
class ConcentrationCurve:
    """Result of a Monte Carlo run over a level grid.

    ``c_emp`` is the batch-mean estimate with band [band_lo, band_hi]
    (2.5/97.5 batch percentiles when batches >= 40, else a normal-theory
    band from the batch standard error, clamped to contain the estimate).
    ``c1`` is the limiting ratio, ``c2`` the second-order approximation per
    level (NaN where undefined), ``c_oracle`` an optional oracle column.
    """

    alphas: np.ndarray
    c_emp: np.ndarray
    band_lo: np.ndarray
    band_hi: np.ndarray
    c1: float
    c2: np.ndarray
    regime: approx.Regime
    degenerate: bool
    c_oracle: Optional[np.ndarray] = None


def empirical_quantile(values, alpha: float) -> float:
    """Order-statistic quantile: the ceil(alpha*N)-th smallest value."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DomainError("empirical_quantile: empty sample")
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"empirical_quantile: alpha must lie in (0, 1), got {alpha!r}")
    k = min(max(int(math.ceil(alpha * v.size)), 1), v.size)
    return float(np.partition(v, k - 1)[k - 1])


def _order_stat_quantiles(values: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    size = values.size
    ks = np.ceil(alphas * size).astype(np.int64)
    np.clip(ks, 1, size, out=ks)
    part = np.partition(values, ks - 1)
    return part[ks - 1]


def _second_order_column(
    model: LossModel, alphas: np.ndarray, n: int, closed_form: bool
) -> tuple[float, np.ndarray, approx.Regime, bool]:
    info = model.second_order_info()
    c1 = approx.first_order_limit(info.xi, n)
    vals = np.empty(alphas.shape)
    regime = approx.classify_regime(info)
    degenerate = regime.tag is approx.RegimeTag.DEGENERATE
    for i, a in enumerate(alphas):
        try:
            res = approx.second_order_approx(model, float(a), n, closed_form=closed_form)
        except DomainError:
            vals[i] = math.nan
            continue
        regime = res.regime
        degenerate = res.degenerate
        vals[i] = res.c2
    return c1, vals, regime, degenerate


def empirical_concentration(
    model: LossModel,
    config: SimulationConfig,
    workers: int = 1,
    closed_form: bool = False,
) -> ConcentrationCurve:
    """Estimate the concentration ratio over the configured level grid."""
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise DomainError(f"empirical_concentration: workers must be an integer >= 1, got {workers!r}")
    n = config.n
    m = config.samples // config.batches
    per_batch = m * n * 8 * (2 if config.denominator is DenominatorMode.EMPIRICAL else 1) + m * 8
    concurrent = min(workers, config.batches)
    if per_batch * concurrent > config.max_bytes:
        raise ResourceLimitError(
            f"a batch of {m} sums of {n} losses needs ~{per_batch} bytes "
            f"({concurrent} concurrently); raise batches, lower workers, or "
            f"raise SimulationConfig.max_bytes (currently {config.max_bytes})"
        )
    alphas = np.asarray(config.alpha_grid, dtype=float)
    exact_den = None
    if config.denominator is DenominatorMode.EXACT:
        exact_den = n * np.atleast_1d(np.asarray(model.quantile(alphas)))
    seeds = np.random.SeedSequence(config.seed).spawn(config.batches)

    def run_batch(b: int) -> np.ndarray:
        rng = np.random.Generator(np.random.PCG64(seeds[b]))
        matrix = model.draw(rng, (m, n))
        sums = matrix.sum(axis=1)
        del matrix
        num = _order_stat_quantiles(sums, alphas)
        if config.denominator is DenominatorMode.EMPIRICAL:
            singles = model.draw(rng, m * n)
            den = n * _order_stat_quantiles(singles, alphas)
        else:
            den = exact_den
        return num / den

    ratios = np.empty((config.batches, alphas.size))
    if workers == 1:
        for b in range(config.batches):
            ratios[b] = run_batch(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for b, row in enumerate(pool.map(run_batch, range(config.batches))):
                ratios[b] = row
    c_emp = ratios.mean(axis=0)
    if config.batches >= 40:
        lo = np.percentile(ratios, 2.5, axis=0)
        hi = np.percentile(ratios, 97.5, axis=0)
    elif config.batches > 1:
        half = 1.96 * ratios.std(axis=0, ddof=1) / math.sqrt(config.batches)
        lo = c_emp - half
        hi = c_emp + half
    else:
        lo = c_emp.copy()
        hi = c_emp.copy()
    np.minimum(lo, c_emp, out=lo)
    np.maximum(hi, c_emp, out=hi)
    c1, c2, regime, degenerate = _second_order_column(model, alphas, n, closed_form)
    return ConcentrationCurve(
        alphas=alphas,
        c_emp=c_emp,
        band_lo=lo,
        band_hi=hi,
        c1=c1,
        c2=c2,
        regime=regime,
        degenerate=degenerate,
    )
