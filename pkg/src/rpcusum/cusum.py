"""CUSUM statistics, variance estimators, null laws and p-values.

For a univariate series y_1..y_n with partial sums S_z, the standard
statistic at candidate split z is

    T_z = (1/sigma_z) * (1/sqrt(n)) * |S_z - (z/n) S_n|

and the weighted statistic rescales by sqrt(n/(z(n-z))) instead of
1/sqrt(n), which stabilizes the variance near the boundaries but requires
a trimmed candidate window. sigma_z is either the split-sample variance
(recomputed at each z) or a HAC long-run variance (computed once on the
demeaned series). The standard statistic always scans z in [1, n-1]; the
weighted one scans [ell, n-ell] with ell from a TrimSpec.

Null laws: sup |B| of a Brownian bridge for the standard variant, with the
analytic Kolmogorov series for p-values; a simulated sup of |B(t)| /
sqrt(t(1-t)) over the trimmed window for the weighted variant, with
empirical p-values from the cached simulation.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from ._rng import generator

#: sigma estimates are floored at this fraction of the sample variance
HAC_FLOOR_FRACTION = 1e-8

#: replications simulated per stream; fixed so results do not depend on
#: scheduling (chunk c covers replication indices [c, c+_NULL_CHUNK))
_NULL_CHUNK = 256

_VARIANTS = ("standard", "weighted")
_VARIANCE_KINDS = ("split", "hac")


@dataclass(frozen=True)
class TrimSpec:
    """Trimming rule resolving to an integer ell with 1 <= ell < n/2.

    Rules: none (ell = 1), n_quarter (floor n^0.25), log_n (floor ln n),
    sqrt_n (floor sqrt n), explicit (a given ell).
    """

    rule: str = "none"
    ell: int | None = None

    _RULES = ("none", "n_quarter", "log_n", "sqrt_n", "explicit")
    _CLI_TOKENS = {"1": "none", "n025": "n_quarter", "logn": "log_n", "sqrtn": "sqrt_n"}

    def __post_init__(self) -> None:
        if self.rule not in self._RULES:
            raise ValueError(f"unknown trim rule: {self.rule!r}")
        if self.rule == "explicit" and (self.ell is None or self.ell < 1):
            raise ValueError("explicit trim needs a positive ell")

    @classmethod
    def from_token(cls, token: str) -> "TrimSpec":
        """Build from a CLI token: one of 1, n025, logn, sqrtn."""
        try:
            return cls(rule=cls._CLI_TOKENS[token])
        except KeyError:
            raise ValueError(f"unknown trim token: {token!r}") from None

    def resolve(self, n: int) -> int:
        if self.rule == "none":
            ell = 1
        elif self.rule == "n_quarter":
            ell = int(math.floor(n**0.25))
        elif self.rule == "log_n":
            ell = int(math.floor(math.log(n)))
        elif self.rule == "sqrt_n":
            ell = int(math.floor(math.sqrt(n)))
        else:
            ell = int(self.ell)
        if not 1 <= ell < n / 2:
            raise ValueError(f"trim {self.rule} resolves to ell={ell}, "
                             f"outside [1, n/2) for n={n}")
        return ell


@dataclass(frozen=True)
class CusumProfile:
    """Statistic sequence over the trimmed candidate window.

    stats[i] is the statistic at z = z_lo + i (1-based candidate index:
    z splits the sample into t <= z and t > z). arg_sup is the smallest
    maximizing z. degenerate_certain marks a zero-variance candidate with
    a positive numerator (statistic +inf).
    """

    stats: np.ndarray
    z_lo: int
    z_hi: int
    sup_stat: float
    arg_sup: int
    variant: str
    variance_kind: str
    n: int
    degenerate_certain: bool

    @property
    def trim_fraction(self) -> float:
        return self.z_lo / self.n


def split_variance(y, z: int) -> float:
    """(1/n) [ sum_{t<=z} (y_t - mean_1)^2 + sum_{t>z} (y_t - mean_2)^2 ]."""
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.size
    if not 1 <= z <= n - 1:
        raise ValueError(f"split index z={z} outside [1, n-1]")
    left, right = y[:z], y[z:]
    ss1 = float(np.sum((left - left.mean()) ** 2))
    ss2 = float(np.sum((right - right.mean()) ** 2))
    return (ss1 + ss2) / n


def hac_variance(y) -> float:
    """Bartlett-kernel long-run variance with the AR(1) plug-in bandwidth.

    sigma^2 = gamma_0 + 2 sum_{h=1}^{floor(S)} (1 - h/(S+1)) gamma_h with
    S = 1.1447 (alpha_1 n)^(1/3), alpha_1 = 4 rho^2 / ((1-rho)^2 (1+rho)^2)
    and rho the lag-1 autocorrelation clipped to [-0.97, 0.97]. Returns 0.0
    for a constant series (degenerate); otherwise floored at a small
    fraction of the sample variance.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.size
    if n < 4:
        raise ValueError("need n >= 4 for the HAC estimator")
    u = y - y.mean()
    gamma0 = float(u @ u) / n
    if gamma0 == 0.0:
        return 0.0
    rho = float(u[:-1] @ u[1:]) / n / gamma0
    rho = min(0.97, max(-0.97, rho))
    alpha1 = 4.0 * rho**2 / ((1.0 - rho) ** 2 * (1.0 + rho) ** 2)
    bandwidth = 1.1447 * (alpha1 * n) ** (1.0 / 3.0)
    est = gamma0
    for h in range(1, min(int(math.floor(bandwidth)), n - 1) + 1):
        est += 2.0 * (1.0 - h / (bandwidth + 1.0)) * float(u[:-h] @ u[h:]) / n
    return max(est, HAC_FLOOR_FRACTION * gamma0)


def _hac_sigmas(yc: np.ndarray) -> np.ndarray:
    # per-column HAC sigma of an already centered n x k matrix
    return np.sqrt([hac_variance(yc[:, r]) for r in range(yc.shape[1])])


def _stat_matrix(
    y: np.ndarray, variant: str, variance_kind: str, ell: int
) -> np.ndarray:
    """Statistics for every column of y over z in [ell, n-ell].

    Returns an (n - 2 ell + 1) x k matrix. Zero-variance candidates give
    +inf where the numerator is positive and 0 where it vanishes.
    """
    n, k = y.shape
    yc = y - y.mean(axis=0, keepdims=True)
    s = np.cumsum(yc, axis=0)
    zf = np.arange(1, n, dtype=np.float64)
    num = np.abs(s[:-1] - np.outer(zf / n, s[-1]))

    if variance_kind == "split":
        q = np.cumsum(yc * yc, axis=0)
        ss1 = q[:-1] - s[:-1] ** 2 / zf[:, None]
        ss2 = (q[-1] - q[:-1]) - (s[-1] - s[:-1]) ** 2 / (n - zf)[:, None]
        sigma = np.sqrt(np.maximum(ss1 + ss2, 0.0) / n)
    else:
        sigma = np.broadcast_to(_hac_sigmas(yc), (n - 1, k))

    if variant == "standard":
        weight = np.full((n - 1, 1), 1.0 / math.sqrt(n))
    else:
        weight = np.sqrt(n / (zf * (n - zf)))[:, None]

    with np.errstate(divide="ignore", invalid="ignore"):
        stats = num * weight / sigma
    zero = sigma == 0.0
    stats[zero & (num > 0.0)] = np.inf
    stats[zero & (num == 0.0)] = 0.0
    # a constant column carries no information; rounding noise from its
    # mean must not leak into the statistics
    constant = np.all(y == y[0], axis=0)
    stats[:, constant] = 0.0
    return stats[ell - 1 : n - ell]


def resolve_ell(variant: str, trim: TrimSpec, n: int) -> int:
    """Trim actually used: the standard variant always scans z in [1, n-1]."""
    return 1 if variant == "standard" else trim.resolve(n)


def cusum_profile(
    y,
    variant: str = "standard",
    variance_kind: str = "split",
    trim: TrimSpec = TrimSpec(),
) -> CusumProfile:
    """Full statistic profile of a univariate series."""
    if variant not in _VARIANTS:
        raise ValueError(f"unknown variant: {variant!r}")
    if variance_kind not in _VARIANCE_KINDS:
        raise ValueError(f"unknown variance kind: {variance_kind!r}")
    y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    n = y.shape[0]
    if n < 4:
        raise ValueError("need n >= 4")
    ell = resolve_ell(variant, trim, n)
    stats = _stat_matrix(y, variant, variance_kind, ell)[:, 0]
    arg = int(np.argmax(stats))
    return CusumProfile(
        stats=stats,
        z_lo=ell,
        z_hi=n - ell,
        sup_stat=float(stats[arg]),
        arg_sup=ell + arg,
        variant=variant,
        variance_kind=variance_kind,
        n=n,
        degenerate_certain=bool(np.isinf(stats[arg])),
    )


def standard_pvalue(sup_stat: float) -> float:
    """P(sup |B| > x) for a Brownian bridge B, by the Kolmogorov series.

    p = 2 sum_{j>=1} (-1)^(j+1) exp(-2 j^2 x^2), truncated once a term
    drops below 1e-12 (at most 100 terms). For x <= 0.1 the value is 1.0
    to double precision; sums within 1e-9 of 1 are reported as exactly 1,
    which keeps the output monotone in x (the truncation noise would
    otherwise show through where the true value saturates). Underflow for
    huge x returns the smallest positive normal instead of 0.
    """
    x = float(sup_stat)
    if x < 0.0:
        raise ValueError("sup statistic must be nonnegative")
    if x <= 0.1:
        return 1.0
    total = 0.0
    sign = 1.0
    for j in range(1, 101):
        term = 2.0 * math.exp(-2.0 * j * j * x * x) if 2.0 * j * j * x * x < 745 else 0.0
        total += sign * term
        if term < 1e-12:
            break
        sign = -sign
    if total >= 1.0 - 1e-9:
        return 1.0
    return min(1.0, max(total, np.finfo(np.float64).tiny))


@dataclass(frozen=True)
class NullDistribution:
    """Simulated null law of the sup statistic on an increments-grid."""

    variant: str
    trim_fraction: float
    samples: np.ndarray
    replications: int
    increments: int
    seed: int

    def quantile(self, q) -> np.ndarray | float:
        return np.quantile(self.samples, q)


def simulate_null(
    variant: str,
    trim_fraction: float,
    replications: int,
    increments: int,
    seed: int,
) -> NullDistribution:
    """Simulate the null sup over Brownian bridges on a regular grid.

    Each replication builds B(t) = W(t) - t W(1) from cumulated Gaussian
    steps on t_i = i/N and records sup over [trim, 1-trim] of |B| (standard)
    or |B|/sqrt(t(1-t)) (weighted). Deterministic in the seed; samples are
    returned sorted ascending.
    """
    if variant not in _VARIANTS:
        raise ValueError(f"unknown variant: {variant!r}")
    if replications < 1000:
        raise ValueError("need at least 1000 replications")
    if increments < 100:
        raise ValueError("need at least 100 increments")
    if not 0.0 <= trim_fraction < 0.5:
        raise ValueError("trim_fraction must lie in [0, 1/2)")
    if variant == "weighted" and trim_fraction == 0.0:
        raise ValueError("weighted variant needs trim_fraction > 0 "
                         "(weight unbounded at the endpoints)")

    n_inc = increments
    t = np.arange(1, n_inc + 1, dtype=np.float64) / n_inc
    i_lo = max(int(math.ceil(trim_fraction * n_inc)), 1)
    i_hi = min(int(math.floor((1.0 - trim_fraction) * n_inc)), n_inc)
    window = slice(i_lo - 1, i_hi)
    tw = t[window]
    weight = 1.0 / np.sqrt(tw * (1.0 - tw)) if variant == "weighted" else None

    out = np.empty(replications)
    scale = 1.0 / math.sqrt(n_inc)
    for start in range(0, replications, _NULL_CHUNK):
        m = min(_NULL_CHUNK, replications - start)
        g = generator(seed, "cusum.null", variant, start)
        w = np.cumsum(g.standard_normal((m, n_inc)) * scale, axis=1)
        b = np.abs(w[:, window] - np.outer(w[:, -1], tw))
        if weight is not None:
            b *= weight
        out[start : start + m] = b.max(axis=1)
    out.sort()
    return NullDistribution(
        variant=variant,
        trim_fraction=float(trim_fraction),
        samples=out,
        replications=replications,
        increments=increments,
        seed=seed,
    )


def weighted_pvalue(
    sup_stat: float,
    null: NullDistribution,
    trim_fraction: float | None = None,
) -> float:
    """Empirical p-value (1 + #{samples >= stat}) / (replications + 1)."""
    if null.variant != "weighted":
        raise ValueError("null distribution is not for the weighted variant")
    if trim_fraction is not None and abs(null.trim_fraction - trim_fraction) > 1e-9:
        raise ValueError(
            f"null simulated at trim {null.trim_fraction}, "
            f"profile trimmed at {trim_fraction}"
        )
    count = null.samples.size - int(
        np.searchsorted(null.samples, sup_stat, side="left")
    )
    return (1 + count) / (null.replications + 1)


def null_cache_name(
    variant: str,
    trim_fraction: float,
    replications: int,
    increments: int,
    seed: int,
) -> str:
    """Canonical cache file name; trim is rounded to 1e-6 in the key."""
    return (
        f"null_{variant}_t{round(trim_fraction, 6):.6f}"
        f"_r{replications}_i{increments}_s{seed}.bin"
    )


def save_null_distribution(null: NullDistribution, path: str) -> None:
    """Binary cache: one ascii header line, then raw little-endian float64."""
    header = (
        f"rpcusum-null v1 variant={null.variant}"
        f" trim_fraction={null.trim_fraction!r}"
        f" replications={null.replications}"
        f" increments={null.increments}"
        f" seed={null.seed}\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(null.samples.astype("<f8").tobytes())


def load_null_distribution(path: str) -> NullDistribution:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        payload = fh.read()
    fields = header.split()
    if len(fields) < 2 or fields[0] != "rpcusum-null" or fields[1] != "v1":
        raise ValueError(f"not a null-distribution cache file: {path}")
    meta = dict(item.split("=", 1) for item in fields[2:])
    samples = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    null = NullDistribution(
        variant=meta["variant"],
        trim_fraction=float(meta["trim_fraction"]),
        samples=samples,
        replications=int(meta["replications"]),
        increments=int(meta["increments"]),
        seed=int(meta["seed"]),
    )
    if samples.size != null.replications:
        raise ValueError(f"corrupt cache (sample count mismatch): {path}")
    return null


def get_or_simulate_null(
    cache_dir: str,
    variant: str,
    trim_fraction: float,
    replications: int,
    increments: int,
    seed: int,
) -> NullDistribution:
    """Load the matching cache from cache_dir, simulating and saving on miss."""
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(
        cache_dir,
        null_cache_name(variant, trim_fraction, replications, increments, seed),
    )
    if os.path.exists(path):
        return load_null_distribution(path)
    null = simulate_null(variant, trim_fraction, replications, increments, seed)
    save_null_distribution(null, path)
    return null
