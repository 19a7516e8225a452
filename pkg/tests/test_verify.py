import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from slicemax.grid import Cube, CubeFamily, GridFunction
from slicemax.norms import ExponentSet
from slicemax.verify import (
    CANONICAL_BMO_SYMBOL,
    DEFAULT_TEST_FUNCTIONS,
    FAIL,
    PASS,
    SCHEMA_VERSION,
    VACUOUS,
    VACUOUS_BOUNDARY,
    GeneratorSpec,
    SuiteConfig,
    VerificationReport,
    check_commutator_domination,
    check_fast_oracle,
    check_holder,
    check_pointwise_bound,
    check_cube_identities,
    check_indicator_identities,
    check_sharp_commutator,
    check_sharp_vs_maximal,
    check_sign_detection,
    check_slice_bound,
    check_equivalence,
    drift,
    generate,
    grows_monotonically,
    hard_failures,
    pointwise_bound_constant,
    refinement_family,
    report_document,
    report_text,
    run_suite,
    summarize,
)


# -- generators --------------------------------------------------------------------


def test_generator_spec_parse():
    s = GeneratorSpec.parse("log:sign=-1, eps=0.01,seed=9")
    assert s.name == "log" and dict(s.params) == {"eps": 0.01, "sign": -1.0} and s.seed == 9
    assert GeneratorSpec.parse("ramp", seed=3).seed == 3
    with pytest.raises(ValueError):
        GeneratorSpec.parse("nope")
    with pytest.raises(ValueError):
        GeneratorSpec.parse("log:sign")


@pytest.mark.parametrize("name", ["constant", "indicator", "step", "smooth", "log", "ramp", "random"])
@pytest.mark.parametrize("shape", [(37,), (9, 11)])
def test_generators_are_bit_reproducible(name, shape):
    spec = GeneratorSpec(name, seed=5)
    a, b = generate(spec, shape, 0.1), generate(spec, shape, 0.1)
    assert a.shape == shape and np.array_equal(a.samples, b.samples)
    assert np.all(np.isfinite(a.samples))


def fine_cell_average(fn, n, h, sub=4000):
    # composite midpoint on sub-cells; the sub-grid avoids the log singularity
    u = (np.arange(n * sub) + 0.5) * h / sub
    return fn(u).reshape(n, sub).mean(axis=1)


@pytest.mark.parametrize("x0", [0.40625, 0.3])
def test_log_generator_is_cell_average(x0):
    n, h, eps = 32, 1 / 32, 0.25
    got = generate(GeneratorSpec("log", {"x0": x0, "eps": eps, "sign": -1.0}), (n,), h).samples
    ref = -fine_cell_average(lambda u: np.log(np.abs(u - x0) + eps * h), n, h)
    assert np.allclose(got, ref, rtol=0, atol=1e-6)


def test_log_generator_2d_quadrature():
    n, h = 8, 1 / 8
    got = generate(GeneratorSpec("log", {"x0": 0.3, "eps": 1.0}), (n, n), h).samples
    sub = 200
    u = (np.arange(n * sub) + 0.5) * h / sub
    vals = np.log(np.hypot(u[:, None] - 0.3, u[None, :] - 0.3) + h)
    ref = vals.reshape(n, sub, n, sub).mean(axis=(1, 3))
    assert np.allclose(got, ref, atol=1e-5)


def test_indicator_uses_exact_overlap():
    f = generate(GeneratorSpec("indicator", {"lo": 0.1, "hi": 0.35}), (10,), 0.1).samples
    assert np.allclose(f, [0, 1, 1, 0.5, 0, 0, 0, 0, 0, 0], atol=1e-12)
    assert math.fsum(f) * 0.1 == pytest.approx(0.25, abs=1e-12)


def test_ramp_and_step():
    r = generate(GeneratorSpec("ramp", {"slope": 2.0}), (4,), 0.5).samples
    assert r.tolist() == [0.5, 1.5, 2.5, 3.5]
    s = generate(GeneratorSpec("step"), (5,), 0.2).samples
    assert np.allclose(s, [-1, -1, 0, 1, 1], atol=1e-12)


def test_same_continuum_instance_across_resolutions():
    # averaging pairs of fine cells reproduces the coarse cell averages
    spec = GeneratorSpec("smooth", seed=4)
    coarse = generate(spec, (32,), 1 / 32).samples
    fine = generate(spec, (64,), 1 / 64).samples
    assert np.allclose(fine.reshape(32, 2).mean(axis=1), coarse, atol=1e-12)
    lg = CANONICAL_BMO_SYMBOL
    c2, f2 = generate(lg, (32,), 1 / 32).samples, generate(lg, (64,), 1 / 64).samples
    # the regularization eps h follows the grid: away from x0 the two differ by about eps h / |x - x0|
    dist = np.abs((np.arange(32) + 0.5) / 32 - 0.40625)
    far = dist > 0.1
    gap = np.abs(f2.reshape(32, 2).mean(axis=1) - c2)[far]
    assert np.all(gap <= 1e-3 / 32 / (dist[far] - 1 / 64))


# -- reports --------------------------------------------------------------------------


def test_report_serialization():
    rep = VerificationReport("x", {"a": 1}, {"v": np.float64(2.0), "bad": math.inf}, {}, PASS)
    d = rep.to_dict()
    assert d["schema_version"] == SCHEMA_VERSION and d["quantities"]["v"] == 2.0
    assert d["quantities"]["bad"] == "inf"
    json.dumps(d, allow_nan=False)
    doc = report_document([rep], {"seed": 1})
    assert doc["schema_version"] == SCHEMA_VERSION and doc["summary"][0]["pass"] == 1


def test_drift_and_growth():
    assert drift([0, 0, 0]) == 0
    assert drift([1.0, 1.25, 1.1]) == pytest.approx(0.25)
    assert drift([0.0, 1.0]) == math.inf
    assert grows_monotonically([1, 2, 3]) and not grows_monotonically([1, 1, 2])


# -- hard checks -----------------------------------------------------------------------


def test_cube_identities_constant_symbol_alpha0():
    b = GridFunction(np.full(12, 2.0))
    rep = check_cube_identities(b, Cube((3,), 4), 0.0)
    assert rep.verdict == PASS
    assert rep.quantities["mean_bound_min_slack"] == pytest.approx(0, abs=1e-15)


def test_cube_identities_balance_random(rng):
    b = GridFunction(rng.standard_normal(16))
    rep = check_cube_identities(b, Cube((4,), 8), 0.25)
    assert rep.verdict == PASS and rep.quantities["balance_residual"] < 1e-12


def test_cube_identities_indicator_value():
    rep = check_cube_identities(GridFunction(np.ones(10)), Cube((3,), 4), 0.5)
    assert rep.verdict == PASS and rep.quantities["chi_identity_max_error"] <= 1e-12 * 2


def test_cube_identities_zero_tolerance_fails(rng):
    fails = 0
    for seed in range(10):
        b = GridFunction(np.random.default_rng(seed).standard_normal(16) * 1e3)
        fails += check_cube_identities(b, Cube((2,), 11), 0.5, tol=0.0).verdict == FAIL
    assert fails > 0


@given(st.integers(0, 2**31), st.sampled_from([0.0, 0.25, 0.5]))
def test_commutator_domination_random_signed(seed, alpha):
    rng = np.random.default_rng(seed)
    b = GridFunction(rng.uniform(-2, 2, 14))
    f = GridFunction(rng.uniform(-1, 1, 14))
    assert check_commutator_domination(b, f, alpha, CubeFamily.up_to(14)).verdict == PASS


def test_commutator_domination_nonnegative_and_zero():
    b = GridFunction(np.linspace(0, 3, 10))
    f = GridFunction(np.sin(np.arange(10.0)))
    assert check_commutator_domination(b, f, 0.5, CubeFamily.up_to(10)).verdict == PASS
    rep = check_commutator_domination(b, f.with_samples(np.zeros(10)), 0.5, CubeFamily.up_to(10))
    assert rep.verdict == PASS and rep.quantities["lhs_max"] == 0


@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5])
def test_indicator_identities_even_cube_in_double_grid(alpha, rng):
    b = GridFunction(rng.standard_normal(16), h=0.25)
    rep = check_indicator_identities(b, Cube((4,), 8), alpha)
    assert rep.verdict == PASS, rep.quantities
    assert rep.quantities["maximal_identity_error"] <= 1e-12 * np.abs(b.samples).max()


def test_indicator_identities_zero_symbol():
    rep = check_indicator_identities(GridFunction(np.zeros(12)), Cube((3,), 4), 0.5)
    assert rep.verdict == PASS and rep.quantities["maximal_identity_error"] == 0


def test_indicator_identities_2d(rng):
    b = GridFunction(rng.standard_normal((10, 10)))
    rep = check_indicator_identities(b, Cube((3, 3), 4), 1.0)
    assert rep.verdict in (PASS, VACUOUS_BOUNDARY)
    assert rep.quantities["restricted_vs_cutoff_gap"] <= 1e-12 * np.abs(b.samples).max()


def test_indicator_identities_flush_cube_is_vacuous_boundary(rng):
    b = GridFunction(rng.standard_normal(8))
    rep = check_indicator_identities(b, Cube((0,), 8), 0.0)
    assert rep.verdict == VACUOUS_BOUNDARY
    assert rep.quantities["sharp_chi_max"] < 0.5


def test_pointwise_checks(rng):
    fam = CubeFamily.up_to(12)
    b = GridFunction(rng.standard_normal(12))
    f = GridFunction(rng.standard_normal(12))
    assert check_sharp_vs_maximal(f, fam).verdict == PASS
    assert check_sharp_commutator(b, f, fam).verdict == PASS
    assert check_fast_oracle(f, 0.5, fam).verdict == PASS
    assert check_holder(b, f, 3.0).verdict == PASS
    assert check_holder(b.with_samples(np.zeros(12)), f, 3.0).verdict == VACUOUS


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_sign_detection(c):
    assert check_sign_detection(c, (12,)).verdict == PASS


# -- soft checks -------------------------------------------------------------------------


def test_pointwise_bound_constant_symbol_vacuous():
    rep = check_pointwise_bound(GeneratorSpec("constant", {"value": 2.0}), DEFAULT_TEST_FUNCTIONS[0], 0.5, (32, 64))
    assert rep.verdict == VACUOUS


def test_pointwise_bound_constant_recorded_at_128():
    n = 128
    b = generate(CANONICAL_BMO_SYMBOL, (n,), 1 / n)
    f = generate(DEFAULT_TEST_FUNCTIONS[0], (n,), 1 / n)
    c, cell = pointwise_bound_constant(b, f, 0.5, refinement_family(n))
    assert math.isfinite(c) and c > 0 and 0 <= cell[0] < n


def test_pointwise_bound_stable_under_one_refinement():
    rep = check_pointwise_bound(CANONICAL_BMO_SYMBOL, DEFAULT_TEST_FUNCTIONS[0], 0.5, (128, 256))
    assert rep.verdict == PASS, f"C_emp {rep.quantities['C_emp']} drift {rep.quantities['drift']:.3f}"


def test_slice_bounds_stable():
    exps = ExponentSet.from_alpha(0.25, 1, 1.5, 1.5)
    assert check_slice_bound("maximal", exps, 1 / 16, threshold=0.10).verdict == PASS
    assert check_slice_bound("fractional", exps, 1 / 16, threshold=0.10).verdict == PASS
    with pytest.raises(ValueError):
        check_slice_bound("other", exps, 1 / 16)


def test_oscillation_equivalence_constant_symbol_all_zero():
    exps = ExponentSet.from_alpha(0.25, 1, 1.5, 1.5)
    rep = check_equivalence("maximal_commutator", GeneratorSpec("constant", {"value": 3.0}), exps, 1 / 16, (32, 64, 128))
    assert rep.verdict == PASS
    assert all(v == 0 for series in rep.quantities["series"].values() for v in series)


def test_fractional_equivalence_sign_of_constant():
    exps = ExponentSet.from_alpha(0.25, 1, 1.5, 1.5)
    neg = check_equivalence("fractional_commutator", GeneratorSpec("constant", {"value": -1.5}), exps, 1 / 16, (32, 64, 128))
    pos = check_equivalence("fractional_commutator", GeneratorSpec("constant", {"value": 1.5}), exps, 1 / 16, (32, 64, 128))
    assert neg.quantities["series"]["maximal_mean"] == pytest.approx([3.0] * 3, abs=1e-10)
    assert pos.quantities["series"]["maximal_mean"] == [0.0] * 3


def test_oscillation_equivalence_ramp_grows_by_two():
    exps = ExponentSet.from_alpha(0.25, 1, 1.5, 1.5)
    rep = check_equivalence("maximal_commutator", GeneratorSpec("ramp"), exps, 1 / 16, (64, 128, 256), mode="grow")
    assert rep.verdict == PASS
    assert rep.quantities["growth_factors"]["oscillation_mean"] == pytest.approx([2.0, 2.0], rel=0.05)


def test_equivalence_check_argument_errors():
    exps = ExponentSet.from_alpha(0.25, 1, 1.5, 1.5)
    with pytest.raises(ValueError):
        check_equivalence("maximal_commutator", GeneratorSpec("ramp"), exps, 1 / 16, (64, 128))
    with pytest.raises(ValueError):
        check_equivalence("maximal_commutator", GeneratorSpec("ramp"), exps, 1 / 16, (16, 32, 64), mode="shrink")


# -- suite ------------------------------------------------------------------------------


def test_empty_corpus_gives_no_reports():
    assert run_suite(SuiteConfig(corpus=())) == []


def test_internal_errors_become_failed_reports(monkeypatch):
    import slicemax.verify as V

    def boom(**kwargs):
        raise RuntimeError("kaput")

    monkeypatch.setattr(V, "check_holder", boom)
    reps = run_suite(SuiteConfig(instances=2, soft=False))
    holder = [r for r in reps if r.check_id == "holder"]
    assert holder and all(r.verdict == FAIL and "kaput" in r.quantities["error"] for r in holder)


def test_default_hard_suite_counts_and_determinism():
    cfg = SuiteConfig(soft=False)
    reps = run_suite(cfg)
    assert len(reps) >= 200
    assert not hard_failures(reps)
    assert report_text(reps, cfg.to_dict()) == report_text(run_suite(cfg), cfg.to_dict())
    keys = [(r.check_id, json.dumps(r.to_dict()["instance"], sort_keys=True)) for r in reps]
    assert keys == sorted(keys)


def test_zero_tolerance_injects_failures():
    reps = run_suite(SuiteConfig(instances=4, soft=False, tolerance=0.0))
    assert hard_failures(reps)


def test_other_seed_changes_instances():
    a = summarize(run_suite(SuiteConfig(instances=3, soft=False, seed=1)))
    b = run_suite(SuiteConfig(instances=3, soft=False, seed=2))
    assert sum(r["instances"] for r in a) == len(b)
    assert report_text(run_suite(SuiteConfig(instances=3, soft=False, seed=1))) != report_text(b)
