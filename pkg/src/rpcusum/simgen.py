"""Synthetic functional data on a grid: Fourier-basis noise plus a mean break.

Each observation is a curve on the unit interval, evaluated at grid points
s_j = j/grid_p. The noise is eps_t(s) = sum_g A_{t,g} v_g(s) with Fourier
basis v_g and independent coefficients A_{t,g} ~ N(0, sigma_g^2); three
sigma schedules control the spectrum. The break function is

    delta(s) = sqrt(c) * (1/sqrt(m)) * sum_{g<=m} v_g(s),
    c = SNR * tr(C_eps) / (theta (1 - theta) sqrt(n_basis)),

where tr(C_eps) is the trace of the sample covariance of the drawn
coefficients (so c varies slightly across replications), and the break is
added to observations t > z* = floor(theta n).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from ._rng import generator
from .projection import DataMatrix

_SETTINGS = ("S1", "S2", "S3")


@dataclass(frozen=True)
class GeneratorConfig:
    n: int = 50
    grid_p: int = 101
    n_basis: int = 21
    setting: str = "S1"
    m: int = 5
    snr: float = 0.0
    theta: float = 0.25
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2 or self.grid_p < 2 or self.n_basis < 1:
            raise ValueError("n, grid_p and n_basis must be at least 2, 2 and 1")
        if self.setting not in _SETTINGS:
            raise ValueError(f"unknown setting: {self.setting!r}")
        if not 1 <= self.m <= self.n_basis:
            raise ValueError("m must lie in [1, n_basis]")
        if self.snr < 0.0:
            raise ValueError("snr must be nonnegative")
        if self.snr > 0.0:
            if not 0.0 < self.theta < 1.0:
                raise ValueError("theta must lie in (0, 1) when snr > 0")
            if not 1 <= math.floor(self.theta * self.n) <= self.n - 1:
                raise ValueError("floor(theta n) must lie in [1, n-1] when snr > 0")


@dataclass(frozen=True)
class BreakSpec:
    """Break function evaluated on the grid; c is its squared L2 magnitude."""

    m: int
    c: float
    delta_grid: np.ndarray


def fourier_basis(n_basis: int, grid_p: int) -> np.ndarray:
    """grid_p x n_basis matrix of v_1 = 1, v_2j = sqrt2 sin(2 pi j s),
    v_{2j+1} = sqrt2 cos(2 pi j s) at s = 1/grid_p, ..., grid_p/grid_p."""
    if n_basis < 1 or grid_p < 2:
        raise ValueError("need n_basis >= 1 and grid_p >= 2")
    s = np.arange(1, grid_p + 1, dtype=np.float64) / grid_p
    basis = np.empty((grid_p, n_basis))
    basis[:, 0] = 1.0
    for g in range(2, n_basis + 1):
        j = g // 2
        if g % 2 == 0:
            basis[:, g - 1] = math.sqrt(2.0) * np.sin(2.0 * np.pi * j * s)
        else:
            basis[:, g - 1] = math.sqrt(2.0) * np.cos(2.0 * np.pi * j * s)
    return basis


def sigma_schedule(setting: str, n_basis: int) -> np.ndarray:
    """Coefficient standard deviations sigma_g, g = 1..n_basis."""
    g = np.arange(1, n_basis + 1, dtype=np.float64)
    if setting == "S1":
        return np.where(g <= 3, 1.0, 0.0)
    if setting == "S2":
        return 3.0**-g
    if setting == "S3":
        return 1.0 / g
    raise ValueError(f"unknown setting: {setting!r}")


def break_magnitude(snr: float, trace: float, theta: float, n_basis: int) -> float:
    """c = snr * trace / (theta (1 - theta) sqrt(n_basis))."""
    return snr * trace / (theta * (1.0 - theta) * math.sqrt(n_basis))


def make_break(cfg: GeneratorConfig, trace: float) -> BreakSpec:
    if cfg.snr == 0.0:
        return BreakSpec(m=cfg.m, c=0.0, delta_grid=np.zeros(cfg.grid_p))
    c = break_magnitude(cfg.snr, trace, cfg.theta, cfg.n_basis)
    basis = fourier_basis(cfg.n_basis, cfg.grid_p)
    delta = math.sqrt(c) / math.sqrt(cfg.m) * basis[:, : cfg.m].sum(axis=1)
    return BreakSpec(m=cfg.m, c=c, delta_grid=delta)


def generate(cfg: GeneratorConfig) -> tuple[DataMatrix, int]:
    """Draw one dataset; returns (X, z*) with z* = floor(theta n).

    When snr = 0 no break is added and z* is only the nominal location.
    """
    g = generator(cfg.seed, "simgen")
    sigmas = sigma_schedule(cfg.setting, cfg.n_basis)
    coeffs = g.standard_normal((cfg.n, cfg.n_basis)) * sigmas
    basis = fourier_basis(cfg.n_basis, cfg.grid_p)
    x = coeffs @ basis.T
    true_z = int(math.floor(cfg.theta * cfg.n))
    if cfg.snr > 0.0:
        trace = float(np.var(coeffs, axis=0, ddof=1).sum())
        x[true_z:] += make_break(cfg, trace).delta_grid
    return DataMatrix(x), true_z


def save_dataset(path: str, data: DataMatrix, cfg: GeneratorConfig, true_z: int) -> None:
    """CSV of the data plus a JSON sidecar (<path>.meta.json) with cfg and z*."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in data.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    meta = {"config": asdict(cfg), "true_z": true_z}
    with open(f"{path}.meta.json", "w", encoding="ascii", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
