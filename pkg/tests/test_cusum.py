import numpy as np
import pytest
from scipy.special import kolmogorov

from rpcusum.cusum import (
    NullDistribution,
    TrimSpec,
    cusum_profile,
    get_or_simulate_null,
    hac_variance,
    load_null_distribution,
    null_cache_name,
    resolve_ell,
    save_null_distribution,
    simulate_null,
    split_variance,
    standard_pvalue,
    weighted_pvalue,
)

_Y8 = np.array([0.0, 1.0, 0.0, 1.0, 5.0, 6.0, 5.0, 6.0])

# frozen from scipy.special.kolmogorov (scipy 1.15.3)
_KOLMOGOROV = [
    (0.5, 0.9639452436648751),
    (1.0, 0.26999967167735456),
    (1.358, 0.05002679733444698),
    (2.0, 0.0006709252557796953),
    (7.07, 7.668271813291846e-44),
]


def test_split_variance_hand_value():
    # both segments have mean-centered sum of squares 1; (1 + 1) / 8
    assert split_variance(_Y8, 4) == pytest.approx(0.25, abs=1e-15)


def test_split_variance_constant_and_scaling():
    assert split_variance(np.full(10, 3.3), 5) == 0.0
    y = np.random.default_rng(0).standard_normal(20)
    assert split_variance(2.5 * y, 7) == pytest.approx(
        2.5**2 * split_variance(y, 7), rel=1e-12
    )


def test_split_variance_index_bounds():
    with pytest.raises(ValueError):
        split_variance(_Y8, 0)
    with pytest.raises(ValueError):
        split_variance(_Y8, 8)


def test_standard_statistic_hand_value():
    # S_4 = 2, S_8 = 24 -> |2 - 12| / sqrt(8) = 3.53553; sigma_4 = 0.5
    profile = cusum_profile(_Y8, "standard", "split")
    assert profile.z_lo == 1 and profile.z_hi == 7
    t4 = profile.stats[4 - profile.z_lo]
    assert t4 == pytest.approx(7.071067811865475, abs=1e-12)
    assert profile.arg_sup == 4
    assert profile.sup_stat == profile.stats.max()


def test_weighted_statistic_hand_value():
    profile = cusum_profile(_Y8, "weighted", "split")
    t4 = profile.stats[4 - profile.z_lo]
    assert t4 == pytest.approx(14.142135623730951, abs=1e-12)


def test_time_reversal_symmetry():
    y = np.random.default_rng(5).standard_normal(60)
    fwd = cusum_profile(y, "standard", "split")
    rev = cusum_profile(y[::-1], "standard", "split")
    assert np.max(np.abs(rev.stats - fwd.stats[::-1])) < 1e-10


@pytest.mark.parametrize("variance_kind", ["split", "hac"])
def test_location_invariance(variance_kind):
    y = np.random.default_rng(6).standard_normal(80)
    a = cusum_profile(y, "standard", variance_kind)
    b = cusum_profile(y + 173.25, "standard", variance_kind)
    assert np.max(np.abs(a.stats - b.stats)) < 1e-9
    assert a.arg_sup == b.arg_sup


@pytest.mark.parametrize("variant", ["standard", "weighted"])
def test_scale_invariance(variant):
    y = np.random.default_rng(7).standard_normal(50)
    a = cusum_profile(y, variant, "split")
    b = cusum_profile(-2.7 * y, variant, "split")
    assert np.max(np.abs(a.stats - b.stats)) < 1e-10


def test_degenerate_certain_flagged():
    y = np.concatenate([np.zeros(6), np.full(6, 4.0)])
    profile = cusum_profile(y, "standard", "split")
    assert profile.degenerate_certain
    assert np.isinf(profile.sup_stat)
    assert profile.arg_sup == 6


def test_flat_series_all_zero_stats():
    profile = cusum_profile(np.full(12, 9.9), "standard", "split")
    assert np.all(profile.stats == 0.0)
    assert not profile.degenerate_certain


def test_constant_series_flat_even_when_mean_rounds():
    # rounding in the mean of a non-dyadic constant must not leak noise
    # into the profile
    for value in (np.pi, 0.1 + 0.2, 2.5 * np.sqrt(3) / np.sqrt(10)):
        for kind in ("split", "hac"):
            profile = cusum_profile(np.full(50, value), "standard", kind)
            assert np.all(profile.stats == 0.0), (value, kind)


def test_profile_validation():
    with pytest.raises(ValueError):
        cusum_profile([1.0, 2.0, 3.0], "standard", "split")
    with pytest.raises(ValueError):
        cusum_profile(_Y8, "cumsum", "split")
    with pytest.raises(ValueError):
        cusum_profile(_Y8, "standard", "ols")


def test_trim_spec_resolution():
    trim_values = {
        "none": 1,
        "n_quarter": 2,  # floor(50 ** 0.25)
        "log_n": 3,  # floor(ln 50)
        "sqrt_n": 7,
    }
    for rule, expected in trim_values.items():
        assert TrimSpec(rule=rule).resolve(50) == expected
    assert TrimSpec(rule="explicit", ell=5).resolve(50) == 5


def test_trim_spec_tokens_and_errors():
    assert TrimSpec.from_token("1").rule == "none"
    assert TrimSpec.from_token("n025").rule == "n_quarter"
    assert TrimSpec.from_token("logn").rule == "log_n"
    assert TrimSpec.from_token("sqrtn").rule == "sqrt_n"
    with pytest.raises(ValueError):
        TrimSpec.from_token("0.15")
    with pytest.raises(ValueError):
        TrimSpec(rule="half")
    with pytest.raises(ValueError):
        TrimSpec(rule="explicit")
    # resolved ell must stay below n/2
    with pytest.raises(ValueError):
        TrimSpec(rule="explicit", ell=25).resolve(50)
    with pytest.raises(ValueError):
        TrimSpec(rule="sqrt_n").resolve(4)


def test_standard_variant_ignores_trim():
    assert resolve_ell("standard", TrimSpec(rule="sqrt_n"), 100) == 1
    assert resolve_ell("weighted", TrimSpec(rule="sqrt_n"), 100) == 10


def test_weighted_profile_respects_trim_window():
    y = np.random.default_rng(8).standard_normal(100)
    profile = cusum_profile(y, "weighted", "split", TrimSpec(rule="sqrt_n"))
    assert profile.z_lo == 10 and profile.z_hi == 90
    assert profile.stats.size == 81
    assert 10 <= profile.arg_sup <= 90
    assert profile.trim_fraction == pytest.approx(0.1)


def test_hac_iid_consistency():
    y = np.random.default_rng(21).standard_normal(5000)
    assert hac_variance(y) == pytest.approx(1.0, abs=0.1)


def test_hac_ar1_long_run_variance():
    # AR(1) with coefficient 0.5: long-run variance 1 / (1 - 0.5)^2 = 4;
    # averaged over independent series to tame the single-draw noise
    from scipy.signal import lfilter

    n, rho = 20000, 0.5
    estimates = []
    for seed in (40, 41, 42, 43):
        eps = np.random.default_rng(seed).standard_normal(n + 200)
        y = lfilter([1.0], [1.0, -rho], eps)[200:]
        estimates.append(hac_variance(y))
    assert all(3.0 < e < 5.0 for e in estimates)
    assert np.mean(estimates) == pytest.approx(4.0, abs=0.4)


def test_hac_shift_invariant_and_degenerate():
    y = np.random.default_rng(23).standard_normal(300)
    assert hac_variance(y + 5.0) == pytest.approx(hac_variance(y), abs=1e-12)
    assert hac_variance(np.full(50, 2.0)) == 0.0
    with pytest.raises(ValueError):
        hac_variance([1.0, 2.0, 3.0])


@pytest.mark.parametrize("x,expected", _KOLMOGOROV)
def test_standard_pvalue_frozen_values(x, expected):
    assert standard_pvalue(x) == pytest.approx(expected, rel=1e-10)


def test_standard_pvalue_matches_scipy_grid():
    xs = np.linspace(0.11, 4.0, 40)
    ours = np.array([standard_pvalue(x) for x in xs])
    assert np.max(np.abs(ours - kolmogorov(xs))) < 1e-10


def test_standard_pvalue_limits():
    assert standard_pvalue(0.0) == 1.0
    assert standard_pvalue(0.1) == 1.0  # indistinguishable from 1 in doubles
    tiny = standard_pvalue(40.0)
    assert 0.0 < tiny < 1e-300  # underflow-safe floor, never exactly zero
    assert standard_pvalue(np.inf) > 0.0
    with pytest.raises(ValueError):
        standard_pvalue(-0.5)


def test_standard_pvalue_decreasing():
    # nonincreasing everywhere; strictly decreasing once the value drops
    # visibly below 1 (the survival function rounds to exactly 1.0 in
    # doubles for x below roughly 0.18)
    xs = np.linspace(0.11, 5.0, 200)
    ps = [standard_pvalue(x) for x in xs]
    assert all(a >= b for a, b in zip(ps, ps[1:]))
    xs = np.linspace(0.5, 5.0, 200)
    ps = [standard_pvalue(x) for x in xs]
    assert all(a > b for a, b in zip(ps, ps[1:]))


def test_simulate_null_deterministic_and_sorted():
    a = simulate_null("standard", 0.0, 1000, 100, seed=9)
    b = simulate_null("standard", 0.0, 1000, 100, seed=9)
    assert np.array_equal(a.samples, b.samples)
    assert np.all(np.diff(a.samples) >= 0)
    c = simulate_null("standard", 0.0, 1000, 100, seed=10)
    assert not np.array_equal(a.samples, c.samples)


def test_simulate_null_standard_quantile():
    null = simulate_null("standard", 0.0, 3000, 2000, seed=14)
    # the discrete-grid sup is biased slightly below the limiting quantile
    assert float(null.quantile(0.95)) == pytest.approx(1.358, abs=0.03)


def test_simulate_null_argument_checks():
    with pytest.raises(ValueError):
        simulate_null("standard", 0.0, 999, 100, seed=0)
    with pytest.raises(ValueError):
        simulate_null("standard", 0.0, 1000, 99, seed=0)
    with pytest.raises(ValueError):
        simulate_null("standard", 0.5, 1000, 100, seed=0)
    with pytest.raises(ValueError):
        simulate_null("weighted", 0.0, 1000, 100, seed=0)
    with pytest.raises(ValueError):
        simulate_null("bridge", 0.0, 1000, 100, seed=0)


def test_weighted_null_domination_in_trim():
    # a wider candidate window can only enlarge the sup
    narrow = simulate_null("weighted", 0.15, 2000, 400, seed=3)
    wide = simulate_null("weighted", 0.05, 2000, 400, seed=3)
    assert float(wide.quantile(0.95)) >= float(narrow.quantile(0.95))


def test_weighted_pvalue_formula():
    null = simulate_null("weighted", 0.1, 1999, 200, seed=4)
    assert weighted_pvalue(0.0, null) == 1.0
    beyond = float(null.samples[-1]) + 1.0
    assert weighted_pvalue(beyond, null) == pytest.approx(1 / 2000)
    med = float(np.median(null.samples))
    assert weighted_pvalue(med, null) == pytest.approx(0.5, abs=0.01)


def test_weighted_pvalue_mismatch_errors():
    null = simulate_null("weighted", 0.1, 1000, 200, seed=4)
    std = simulate_null("standard", 0.0, 1000, 200, seed=4)
    with pytest.raises(ValueError, match="not for the weighted"):
        weighted_pvalue(1.0, std)
    with pytest.raises(ValueError, match="trim"):
        weighted_pvalue(1.0, null, trim_fraction=0.2)
    assert 0.0 < weighted_pvalue(1.0, null, trim_fraction=0.1) <= 1.0


def test_null_cache_roundtrip(tmp_path):
    null = simulate_null("weighted", 0.1, 1000, 150, seed=31)
    path = tmp_path / "null.bin"
    save_null_distribution(null, path)
    loaded = load_null_distribution(path)
    assert loaded.variant == "weighted"
    assert loaded.trim_fraction == pytest.approx(0.1)
    assert (loaded.replications, loaded.increments, loaded.seed) == (1000, 150, 31)
    assert np.array_equal(loaded.samples, null.samples)
    # re-saving reproduces the file bitwise
    path2 = tmp_path / "null2.bin"
    save_null_distribution(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_null_cache_rejects_garbage(tmp_path):
    path = tmp_path / "bogus.bin"
    path.write_bytes(b"something else entirely\n\x00\x01")
    with pytest.raises(ValueError, match="not a null-distribution cache"):
        load_null_distribution(path)


def test_null_cache_detects_truncation(tmp_path):
    null = simulate_null("weighted", 0.1, 1000, 150, seed=31)
    path = tmp_path / "null.bin"
    save_null_distribution(null, path)
    data = path.read_bytes()
    path.write_bytes(data[:-16])
    with pytest.raises(ValueError, match="corrupt cache"):
        load_null_distribution(path)


def test_null_cache_name_rounds_trim():
    a = null_cache_name("weighted", 0.1, 1000, 100, 7)
    b = null_cache_name("weighted", 0.1 + 1e-9, 1000, 100, 7)
    assert a == b == "null_weighted_t0.100000_r1000_i100_s7.bin"


def test_get_or_simulate_null_uses_cache(tmp_path):
    args = ("weighted", 0.1, 1000, 150, 99)
    first = get_or_simulate_null(tmp_path, *args)
    # doctor the cached samples; a second call must return the doctored
    # values, proving it loaded from disk instead of resimulating
    doctored = NullDistribution(
        variant=first.variant,
        trim_fraction=first.trim_fraction,
        samples=first.samples + 1.0,
        replications=first.replications,
        increments=first.increments,
        seed=first.seed,
    )
    path = tmp_path / null_cache_name(*args)
    save_null_distribution(doctored, path)
    second = get_or_simulate_null(tmp_path, *args)
    assert np.array_equal(second.samples, first.samples + 1.0)
