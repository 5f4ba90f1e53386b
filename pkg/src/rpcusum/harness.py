"""Monte Carlo studies: size, power, size-adjusted power, RMSE, repetitions.

An ExperimentSpec describes a grid over (setting, m, k, snr) plus detector
settings and a replication count. Every replication derives its generator
and detector seeds from the master seed and the full cell coordinates, so
results are reproducible and independent across snr values (null and
alternative runs never share streams), while the same datasets are reused
across k values and combiners for paired comparisons.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from ._rng import child_seed
from ._version import __version__
from .cusum import TrimSpec
from .detector import DetectorConfig, RepetitionSummary, detect_multi, detect_repeated
from .simgen import GeneratorConfig, generate

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

_METRICS = ("size", "power", "adj_power", "rmse", "rmse_sig", "repetition")

_TRIM_TOKENS = {"1": "none", "n025": "n_quarter", "logn": "log_n", "sqrtn": "sqrt_n"}


@dataclass(frozen=True)
class ExperimentSpec:
    settings: tuple[str, ...] = ("S1",)
    m_grid: tuple[int, ...] = (5,)
    snr_grid: tuple[float, ...] = (0.0,)
    k_grid: tuple[int, ...] = (200,)
    methods: tuple[str, ...] = ("bonf", "bh", "hmp", "cct")
    n: int = 50
    grid_p: int = 101
    n_basis: int = 21
    theta: float = 0.25
    variant: str = "standard"
    variance_kind: str = "split"
    trim: TrimSpec = field(default_factory=TrimSpec)
    alpha: float = 0.05
    replications: int = 1000
    seed: int = 0
    metrics: tuple[str, ...] = ("size",)
    repetition_datasets: int = 1
    repetition_r: int = 100

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be positive")
        if not self.snr_grid:
            raise ValueError("snr grid must be nonempty")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        unknown = set(self.metrics) - set(_METRICS)
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentSpec":
        """Build from a parsed config mapping; unknown keys are fatal."""
        sections = {"experiment", "generator", "detector"}
        _reject_unknown("top level", raw, sections)
        exp = dict(raw.get("experiment", {}))
        gen = dict(raw.get("generator", {}))
        det = dict(raw.get("detector", {}))
        _reject_unknown(
            "experiment",
            exp,
            {"replications", "seed", "metrics", "repetition_datasets", "repetition_r"},
        )
        _reject_unknown(
            "generator",
            gen,
            {"n", "grid_p", "n_basis", "theta", "settings", "m", "snr"},
        )
        _reject_unknown(
            "detector",
            det,
            {"k", "variant", "variance", "trim", "methods", "alpha"},
        )
        variant = det.get("variant", "cusum")
        if variant not in ("cusum", "weighted"):
            raise ValueError(f"unknown detector variant: {variant!r}")
        trim_token = det.get("trim", "1")
        if trim_token not in _TRIM_TOKENS:
            raise ValueError(f"unknown trim token: {trim_token!r}")
        kwargs = {}
        for key, src, name in (
            ("replications", exp, "replications"),
            ("seed", exp, "seed"),
            ("repetition_datasets", exp, "repetition_datasets"),
            ("repetition_r", exp, "repetition_r"),
            ("n", gen, "n"),
            ("grid_p", gen, "grid_p"),
            ("n_basis", gen, "n_basis"),
            ("theta", gen, "theta"),
            ("alpha", det, "alpha"),
        ):
            if name in src:
                kwargs[key] = src[name]
        if "metrics" in exp:
            kwargs["metrics"] = tuple(exp["metrics"])
        if "settings" in gen:
            kwargs["settings"] = tuple(gen["settings"])
        if "m" in gen:
            kwargs["m_grid"] = tuple(int(v) for v in gen["m"])
        if "snr" in gen:
            kwargs["snr_grid"] = tuple(float(v) for v in gen["snr"])
        if "k" in det:
            kwargs["k_grid"] = tuple(int(v) for v in det["k"])
        if "methods" in det:
            kwargs["methods"] = tuple(det["methods"])
        kwargs["variant"] = "standard" if variant == "cusum" else "weighted"
        kwargs["variance_kind"] = det.get("variance", "split")
        kwargs["trim"] = TrimSpec(rule=_TRIM_TOKENS[trim_token])
        return cls(**kwargs)

    @classmethod
    def from_toml(cls, path: str) -> tuple["ExperimentSpec", dict]:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        return cls.from_dict(raw), raw


def _reject_unknown(section: str, mapping: dict, allowed: set[str]) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ValueError(f"unknown keys in {section} section: {', '.join(unknown)}")


RESULT_COLUMNS = (
    "setting",
    "m",
    "theta",
    "snr",
    "k",
    "method",
    "variant",
    "rejection_rate",
    "adj_rejection_rate",
    "rmse_all",
    "rmse_significant",
    "mc_stderr",
)


@dataclass(frozen=True)
class ResultTable:
    rows: tuple[dict, ...]
    spec_dict: dict
    master_seed: int

    def to_csv(self) -> str:
        lines = [",".join(RESULT_COLUMNS)]
        for row in self.rows:
            cells = []
            for col in RESULT_COLUMNS:
                value = row.get(col)
                if value is None:
                    cells.append("")
                elif isinstance(value, float):
                    cells.append(repr(value))
                else:
                    cells.append(str(value))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def sidecar_json(self) -> str:
        doc = {
            "code_version": __version__,
            "columns": list(RESULT_COLUMNS),
            "master_seed": self.master_seed,
            "spec": self.spec_dict,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def mc_stderr(rate: float, replications: int) -> float:
    """Monte Carlo standard error of a rejection rate."""
    return math.sqrt(rate * (1.0 - rate) / replications)


def _cell_runs(spec: ExperimentSpec, setting: str, m: int, k: int, snr: float):
    """p_comb / z_hat / significance per method for one grid cell."""
    reps = spec.replications
    pcombs = {method: [0.0] * reps for method in spec.methods}
    zhats = {method: [0] * reps for method in spec.methods}
    trues = [0] * reps
    snr_token = repr(float(snr))
    for rep in range(reps):
        gen_cfg = GeneratorConfig(
            n=spec.n,
            grid_p=spec.grid_p,
            n_basis=spec.n_basis,
            setting=setting,
            m=m,
            snr=snr,
            theta=spec.theta,
            seed=child_seed(spec.seed, "gen", setting, m, snr_token, rep),
        )
        data, true_z = generate(gen_cfg)
        det_cfg = DetectorConfig(
            k=k,
            variant=spec.variant,
            variance_kind=spec.variance_kind,
            trim=spec.trim,
            method=spec.methods[0],
            alpha=0.05,
            seed=child_seed(spec.seed, "det", setting, m, snr_token, k, rep),
        )
        reports = detect_multi(data, det_cfg, methods=spec.methods)
        trues[rep] = true_z
        for method, report in reports.items():
            pcombs[method][rep] = report.p_comb
            zhats[method][rep] = report.z_hat
    return pcombs, zhats, trues


def _quantile(values: list[float], q: float) -> float:
    # linear-interpolation quantile, matching numpy's default
    ordered = sorted(values)
    pos = q * (len(ordered) - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(ordered) - 1)
    return ordered[lo] + (pos - lo) * (ordered[hi] - ordered[lo])


def _rmse(zhats: list[int], trues: list[int], n: int, keep=None) -> float | None:
    pairs = zip(zhats, trues) if keep is None else (
        (z, t) for z, t, s in zip(zhats, trues, keep) if s
    )
    sq = [((z - t) / n) ** 2 for z, t in pairs]
    if not sq:
        return None
    return math.sqrt(sum(sq) / len(sq))


def _run(spec: ExperimentSpec, metrics: tuple[str, ...], spec_dict: dict) -> ResultTable:
    want_rate = bool({"size", "power"} & set(metrics))
    want_adj = "adj_power" in metrics
    want_rmse = bool({"rmse", "rmse_sig"} & set(metrics))
    if want_adj and 0.0 not in spec.snr_grid:
        raise ValueError("adj_power needs an snr=0 cell in the grid")
    rows = []
    for setting in spec.settings:
        for m in spec.m_grid:
            for k in spec.k_grid:
                cells = {
                    snr: _cell_runs(spec, setting, m, k, snr) for snr in spec.snr_grid
                }
                thresholds = {}
                if want_adj:
                    null_pcombs = cells[0.0][0]
                    thresholds = {
                        method: _quantile(null_pcombs[method], spec.alpha)
                        for method in spec.methods
                    }
                for snr in spec.snr_grid:
                    pcombs, zhats, trues = cells[snr]
                    for method in spec.methods:
                        row = {
                            "setting": setting,
                            "m": m,
                            "theta": spec.theta,
                            "snr": float(snr),
                            "k": k,
                            "method": method,
                            "variant": "cusum" if spec.variant == "standard" else "weighted",
                        }
                        rejected = [p < spec.alpha for p in pcombs[method]]
                        if want_rate:
                            rate = sum(rejected) / spec.replications
                            row["rejection_rate"] = rate
                            row["mc_stderr"] = mc_stderr(rate, spec.replications)
                        if want_adj and snr > 0.0:
                            adj = sum(
                                p < thresholds[method] for p in pcombs[method]
                            ) / spec.replications
                            row["adj_rejection_rate"] = adj
                            if "mc_stderr" not in row:
                                row["mc_stderr"] = mc_stderr(adj, spec.replications)
                        if want_rmse and snr > 0.0:
                            row["rmse_all"] = _rmse(zhats[method], trues, spec.n)
                            if "rmse_sig" in metrics:
                                row["rmse_significant"] = _rmse(
                                    zhats[method], trues, spec.n, keep=rejected
                                )
                        rows.append(row)
    return ResultTable(rows=tuple(rows), spec_dict=spec_dict, master_seed=spec.seed)


def run_size_power(spec: ExperimentSpec, spec_dict: dict | None = None) -> ResultTable:
    """Rejection rates (size at snr=0, raw power otherwise) over the grid."""
    return _run(spec, ("size", "power"), spec_dict or {})


def run_size_adjusted_power(
    spec: ExperimentSpec, spec_dict: dict | None = None
) -> ResultTable:
    """Power against the empirical null alpha-quantile of p_comb.

    The threshold for each (setting, m, k, method) is the alpha-quantile of
    the snr=0 replications' combined p-values; alternative replications use
    seed streams disjoint from the null ones.
    """
    return _run(spec, ("size", "power", "adj_power"), spec_dict or {})


def run_rmse(spec: ExperimentSpec, spec_dict: dict | None = None) -> ResultTable:
    """RMSE of theta_hat = z_hat/n about the realized z*/n, all and significant."""
    return _run(spec, ("rmse", "rmse_sig"), spec_dict or {})


def run_experiment(spec: ExperimentSpec, spec_dict: dict | None = None) -> ResultTable:
    """Run every table metric in spec.metrics (repetition is separate)."""
    metrics = tuple(m for m in spec.metrics if m != "repetition")
    return _run(spec, metrics, spec_dict or {})


@dataclass(frozen=True)
class RepetitionRecord:
    setting: str
    m: int
    theta: float
    snr: float
    k: int
    method: str
    dataset: int
    summary: RepetitionSummary


def run_repetition_study(
    spec: ExperimentSpec, dataset_count: int, repetitions: int
) -> list[RepetitionRecord]:
    """Fix dataset_count datasets per cell; run detect_repeated on each."""
    if repetitions < 2:
        raise ValueError("need at least 2 repetitions")
    if dataset_count < 1:
        raise ValueError("need at least one dataset")
    records = []
    for setting in spec.settings:
        for m in spec.m_grid:
            for k in spec.k_grid:
                for snr in spec.snr_grid:
                    snr_token = repr(float(snr))
                    for d in range(dataset_count):
                        gen_cfg = GeneratorConfig(
                            n=spec.n,
                            grid_p=spec.grid_p,
                            n_basis=spec.n_basis,
                            setting=setting,
                            m=m,
                            snr=snr,
                            theta=spec.theta,
                            seed=child_seed(
                                spec.seed, "repstudy.gen", setting, m, snr_token, d
                            ),
                        )
                        data, _ = generate(gen_cfg)
                        for method in spec.methods:
                            det_cfg = DetectorConfig(
                                k=k,
                                variant=spec.variant,
                                variance_kind=spec.variance_kind,
                                trim=spec.trim,
                                method=method,
                                alpha=min(spec.alpha, 0.999999),
                                seed=child_seed(
                                    spec.seed,
                                    "repstudy.det",
                                    setting,
                                    m,
                                    snr_token,
                                    k,
                                    d,
                                    method,
                                ),
                            )
                            records.append(
                                RepetitionRecord(
                                    setting=setting,
                                    m=m,
                                    theta=spec.theta,
                                    snr=float(snr),
                                    k=k,
                                    method=method,
                                    dataset=d,
                                    summary=detect_repeated(data, det_cfg, repetitions),
                                )
                            )
    return records


def repetition_csv(records: list[RepetitionRecord]) -> str:
    header = "setting,m,theta,snr,k,method,dataset,repetitions,mode,mode_count,significant_count"
    lines = [header]
    for rec in records:
        s = rec.summary
        lines.append(
            f"{rec.setting},{rec.m},{rec.theta!r},{rec.snr!r},{rec.k},{rec.method},"
            f"{rec.dataset},{len(s.locations)},{s.mode},{s.mode_count},"
            f"{sum(s.significant_mask)}"
        )
    return "\n".join(lines) + "\n"
