"""End-to-end detection pipeline and repetition/mode stabilization.

detect() wires the stages together: draw a sparse direction matrix, project
the data to k univariate series, compute a CUSUM profile and a p-value per
series, combine the p-values, and read the location estimate off the winning
projection's profile. Since the directions are random, detect_repeated()
reruns the detector with independent direction draws and aggregates the
location estimates by their mode.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace

import numpy as np

from ._rng import child_seed
from .combine import combine
from .cusum import (
    NullDistribution,
    TrimSpec,
    _stat_matrix,
    resolve_ell,
    simulate_null,
    standard_pvalue,
    weighted_pvalue,
)
from .projection import DataMatrix, ProjectionMatrix, generate_directions, project

#: default simulation size when a weighted-variant call has no null attached
DEFAULT_NULL_REPLICATIONS = 20000
DEFAULT_NULL_INCREMENTS = 2000

_METHODS = ("bonf", "bh", "hmp", "cct")


@dataclass(frozen=True)
class DetectorConfig:
    k: int = 200
    variant: str = "standard"
    variance_kind: str = "split"
    trim: TrimSpec = TrimSpec()
    method: str = "bonf"
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.variant not in ("standard", "weighted"):
            raise ValueError(f"unknown variant: {self.variant!r}")
        if self.variance_kind not in ("split", "hac"):
            raise ValueError(f"unknown variance kind: {self.variance_kind!r}")
        if self.method not in _METHODS:
            raise ValueError(f"unknown method: {self.method!r}")


@dataclass(frozen=True)
class DetectionReport:
    """Result of one detection run.

    winner is 1-based. flag is None, "certain" (winning profile had a
    zero-variance candidate with positive numerator, detection is certain)
    or "flat" (all profiles identically zero, no information). The optional
    per_projection table has one row (raw p, adjusted p, sup stat, arg sup)
    per projection; adjusted is NaN for combiners without adjusted values.
    """

    p_comb: float
    significant: bool
    z_hat: int
    theta_hat: float
    winner: int
    n: int
    flag: str | None = None
    per_projection: np.ndarray | None = None

    def to_text(self) -> str:
        lines = [
            f"p_comb={self.p_comb!r}",
            f"significant={'true' if self.significant else 'false'}",
            f"z_hat={self.z_hat}",
            f"theta_hat={self.theta_hat!r}",
            f"winner={self.winner}",
            f"flag={self.flag or 'none'}",
        ]
        return "\n".join(lines) + "\n"

    def per_projection_csv(self) -> str:
        if self.per_projection is None:
            raise ValueError("report carries no per-projection table")
        lines = ["projection,raw_p,adjusted_p,sup_stat,arg_sup"]
        for r, (raw, adj, sup, arg) in enumerate(self.per_projection, start=1):
            adj_txt = "" if np.isnan(adj) else repr(float(adj))
            lines.append(f"{r},{float(raw)!r},{adj_txt},{float(sup)!r},{int(arg)}")
        return "\n".join(lines) + "\n"


def _as_data(X) -> DataMatrix:
    return X if isinstance(X, DataMatrix) else DataMatrix(np.asarray(X, dtype=np.float64))


def _pipeline(
    X: DataMatrix,
    cfg: DetectorConfig,
    directions: ProjectionMatrix | None,
    null: NullDistribution | None,
):
    n = X.n
    ell = resolve_ell(cfg.variant, cfg.trim, n)
    if n < 2 * ell + 2:
        raise ValueError(f"series too short: n={n} < {2 * ell + 2} for trim {ell}")
    if directions is None:
        directions = generate_directions(X.p, cfg.k, child_seed(cfg.seed, "directions"))
    elif directions.p != X.p:
        raise ValueError("direction matrix does not match the data dimension")
    y = project(X, directions).values

    stats = _stat_matrix(y, cfg.variant, cfg.variance_kind, ell)
    sup = stats.max(axis=0)
    arg_z = ell + stats.argmax(axis=0)

    if cfg.variant == "standard":
        raw = np.array([standard_pvalue(s) for s in sup])
    else:
        if null is None:
            null = simulate_null(
                "weighted",
                ell / n,
                DEFAULT_NULL_REPLICATIONS,
                DEFAULT_NULL_INCREMENTS,
                child_seed(cfg.seed, "null"),
            )
        raw = np.array([weighted_pvalue(s, null, trim_fraction=ell / n) for s in sup])
    return raw, sup, arg_z, ell


def _report(
    raw: np.ndarray,
    sup: np.ndarray,
    arg_z: np.ndarray,
    ell: int,
    n: int,
    method: str,
    alpha: float,
    with_table: bool,
) -> DetectionReport:
    table = None
    if not np.any(sup > 0.0):
        # every profile is identically zero: no information in the data
        z_mid = (ell + (n - ell)) // 2
        if with_table:
            table = _table(raw, np.full_like(raw, np.nan), sup, arg_z)
        return DetectionReport(
            p_comb=1.0,
            significant=False,
            z_hat=z_mid,
            theta_hat=z_mid / n,
            winner=1,
            n=n,
            flag="flat",
            per_projection=table,
        )
    combined = combine(raw, method)
    winner = combined.winner
    z_hat = int(arg_z[winner - 1])
    flag = "certain" if np.isinf(sup[winner - 1]) else None
    if with_table:
        adjusted = (
            combined.adjusted
            if combined.adjusted is not None
            else np.full_like(raw, np.nan)
        )
        table = _table(raw, adjusted, sup, arg_z)
    return DetectionReport(
        p_comb=combined.p_comb,
        significant=combined.p_comb < alpha,
        z_hat=z_hat,
        theta_hat=z_hat / n,
        winner=winner,
        n=n,
        flag=flag,
        per_projection=table,
    )


def _table(raw, adjusted, sup, arg_z) -> np.ndarray:
    return np.column_stack([raw, adjusted, sup, arg_z.astype(np.float64)])


def detect(
    X,
    cfg: DetectorConfig = DetectorConfig(),
    directions: ProjectionMatrix | None = None,
    null: NullDistribution | None = None,
    with_table: bool = False,
) -> DetectionReport:
    """Run the full detection pipeline once.

    directions injects a caller-provided projection matrix (cfg.k is then
    ignored in favor of its k). For the weighted variant, null supplies the
    simulated null law; without one, a default-sized null is simulated from
    a sub-stream of cfg.seed.
    """
    data = _as_data(X)
    raw, sup, arg_z, ell = _pipeline(data, cfg, directions, null)
    return _report(raw, sup, arg_z, ell, data.n, cfg.method, cfg.alpha, with_table)


def detect_multi(
    X,
    cfg: DetectorConfig = DetectorConfig(),
    methods: tuple[str, ...] = _METHODS,
    directions: ProjectionMatrix | None = None,
    null: NullDistribution | None = None,
) -> dict[str, DetectionReport]:
    """detect() under several combiners sharing one projection and profile pass."""
    data = _as_data(X)
    raw, sup, arg_z, ell = _pipeline(data, cfg, directions, null)
    return {
        m: _report(raw, sup, arg_z, ell, data.n, m, cfg.alpha, False) for m in methods
    }


@dataclass(frozen=True)
class RepetitionSummary:
    """Location estimates across repeated detection runs.

    mode is the most frequent location over all repetitions (smallest
    location on ties), significant or not.
    """

    locations: tuple[int, ...]
    significant_mask: tuple[bool, ...]
    mode: int
    mode_count: int
    histogram: dict[int, int]

    @classmethod
    def from_runs(cls, locations, significant_mask) -> "RepetitionSummary":
        locations = tuple(int(z) for z in locations)
        mask = tuple(bool(b) for b in significant_mask)
        if not locations:
            raise ValueError("no repetitions")
        if len(mask) != len(locations):
            raise ValueError("mask length does not match locations")
        mode, count = _mode(locations)
        return cls(
            locations=locations,
            significant_mask=mask,
            mode=mode,
            mode_count=count,
            histogram=dict(sorted(Counter(locations).items())),
        )

    def significant_mode(self) -> tuple[int, int] | None:
        """Mode over significant repetitions only; None if none were."""
        kept = [z for z, s in zip(self.locations, self.significant_mask) if s]
        return _mode(kept) if kept else None

    def to_text(self) -> str:
        lines = [
            f"repetitions={len(self.locations)}",
            f"mode={self.mode}",
            f"mode_count={self.mode_count}",
            f"significant_count={sum(self.significant_mask)}",
        ]
        return "\n".join(lines) + "\n"

    def histogram_csv(self, year_labels: list[int] | None = None) -> str:
        if year_labels is None:
            lines = ["location,count"]
            lines += [f"{z},{c}" for z, c in self.histogram.items()]
        else:
            lines = ["location,label,count"]
            lines += [
                f"{z},{location_label(z, year_labels)},{c}"
                for z, c in self.histogram.items()
            ]
        return "\n".join(lines) + "\n"


def _mode(locations) -> tuple[int, int]:
    counts = Counter(locations)
    best = max(counts.values())
    return min(z for z, c in counts.items() if c == best), best


def location_label(z_hat: int, year_labels: list[int]) -> int:
    """Map a location estimate to its label: label[0] + z_hat - 1.

    z_hat is the last pre-change index, so the returned label names the
    last pre-change year.
    """
    if not 1 <= z_hat <= len(year_labels):
        raise ValueError("location outside the labeled range")
    return year_labels[0] + z_hat - 1


def detect_repeated(
    X,
    cfg: DetectorConfig = DetectorConfig(),
    repetitions: int = 100,
    null: NullDistribution | None = None,
) -> RepetitionSummary:
    """Rerun detect() with independent direction draws; aggregate by mode.

    Repetition i uses a seed derived from (cfg.seed, i), so the whole
    summary is reproducible from cfg.seed alone. All location estimates
    enter the histogram; significance is recorded alongside.
    """
    if repetitions < 1:
        raise ValueError("need at least one repetition")
    data = _as_data(X)
    if cfg.variant == "weighted" and null is None:
        ell = resolve_ell(cfg.variant, cfg.trim, data.n)
        null = simulate_null(
            "weighted",
            ell / data.n,
            DEFAULT_NULL_REPLICATIONS,
            DEFAULT_NULL_INCREMENTS,
            child_seed(cfg.seed, "null"),
        )
    locations = []
    mask = []
    for i in range(repetitions):
        rep_cfg = replace(cfg, seed=child_seed(cfg.seed, "repetition", i))
        report = detect(data, rep_cfg, null=null)
        locations.append(report.z_hat)
        mask.append(report.significant)
    return RepetitionSummary.from_runs(locations, mask)
