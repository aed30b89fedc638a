import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from useq import identities as ids
from useq.errors import UsageError
from useq.identities import (
    IdentityId,
    IdentityInstance,
    IdentityReport,
    SweepConfig,
    SweepSummary,
    evaluate,
    lhs_master,
    rhs_master,
    sweep,
)
from useq.sequences import FIBONACCI, LUCAS, SequenceParams, term

HALF = Fraction(1, 2)
rationals = st.fractions(min_value=-10, max_value=10, max_denominator=9)
nonzero = rationals.filter(lambda c: c != 0)
params_st = st.builds(SequenceParams, rationals, rationals, rationals)


def test_master_examples():
    assert lhs_master(FIBONACCI, 2, 3) == rhs_master(FIBONACCI, 2, 3) == 48
    assert lhs_master(LUCAS, HALF, 2) == rhs_master(LUCAS, HALF, 2) == HALF


@settings(max_examples=200, deadline=None)
@given(params_st, nonzero)
def test_master_base_case_is_a_times_c(params, c):
    assert lhs_master(params, c, 0) == rhs_master(params, c, 0) == params.a * c


@pytest.mark.parametrize("fn", [lhs_master, rhs_master])
def test_master_rejects_zero_c_and_negative_m(fn):
    with pytest.raises(UsageError):
        fn(FIBONACCI, 0, 1)
    with pytest.raises(UsageError):
        fn(FIBONACCI, 2, -1)


@pytest.mark.parametrize(
    "call, expected",
    [
        # values frozen from tests/oracles.py direct summation
        (lambda: ids.sides_gen_fib(1, 1, 2, 3), (48, 48)),
        (lambda: ids.sides_gen_fib(1, 3, HALF, 2), (HALF, HALF)),
        (lambda: ids.sides_gen_fib(Fraction(7, 3), -4, Fraction(-2, 5), 0),
         (Fraction(7, 3) * Fraction(-2, 5),) * 2),
        (lambda: ids.sides_fib_c(2, 3), (48, 48)),
        (lambda: ids.sides_fib_c(1, 4), (5, 5)),
        (lambda: ids.sides_fib_c(3, 0), (3, 3)),
        (lambda: ids.sides_sury(0), (2, 2)),
        (lambda: ids.sides_sury(3), (48, 48)),
        (lambda: ids.sides_sury(8), (17408, 17408)),
        (lambda: ids.sides_marques(0), (3, 3)),
        (lambda: ids.sides_marques(2), (54, 54)),
        (lambda: ids.sides_marques(10), (15766083, 15766083)),
        (lambda: ids.sides_lucas_c(HALF, 2), (HALF, HALF)),
        (lambda: ids.sides_lucas_c(1, 0), (1, 1)),
        (lambda: ids.sides_lucas_c(2, 4), (352, 352)),
        (lambda: ids.sides_gen_fib_c1(1, 1, 4), (5, 5)),
        (lambda: ids.sides_gen_fib_c1(1, 3, 0), (1, 1)),
        (lambda: ids.sides_gen_fib_c1(2, 5, 6), (50, 50)),
        (lambda: ids.sides_gen_pell(1, 2, Fraction(-9, 4), 0), (Fraction(-9, 4),) * 2),
        (lambda: ids.sides_gen_pell(1, 2, 2, 2), (40, 40)),
        (lambda: ids.sides_gen_pell(2, 6, 3, 3), (2754, 2754)),
        (lambda: ids.sides_pell_c(2, 2), (40, 40)),
        (lambda: ids.sides_pell_c(2, 0), (2, 2)),
        (lambda: ids.sides_pell_c(Fraction(5, 2), 3), (Fraction(1875, 4),) * 2),
        (lambda: ids.sides_pell_c2(0), (2, 2)),
        (lambda: ids.sides_pell_c2(2), (40, 40)),
        (lambda: ids.sides_pell_c2(7), (104448, 104448)),
        (lambda: ids.sides_pell_lucas_c(1, 0), (2, 2)),
        (lambda: ids.sides_pell_lucas_c(2, 1), (24, 24)),
        (lambda: ids.sides_pell_lucas_c(-3, 4), (-19926, -19926)),
        (lambda: ids.sides_gen_pell_c1(1, 2, 2), (5, 5)),
        (lambda: ids.sides_gen_pell_c1(2, 6, 0), (2, 2)),
        (lambda: ids.sides_gen_pell_c1(3, 1, 5), (65, 65)),
    ],
)
def test_side_evaluator_examples(call, expected):
    assert call() == expected


@pytest.mark.parametrize(
    "call",
    [
        lambda: ids.sides_gen_fib(1, 1, 0, 2),
        lambda: ids.sides_fib_c(0, 2),
        lambda: ids.sides_lucas_c(0, 1),
        lambda: ids.sides_gen_pell(1, 2, 0, 1),
        lambda: ids.sides_pell_c(0, 1),
        lambda: ids.sides_pell_lucas_c(0, 1),
        lambda: ids.sides_sury(-1),
    ],
)
def test_side_evaluators_reject_bad_input(call):
    with pytest.raises(UsageError):
        call()


def test_evaluate_examples():
    report = evaluate(IdentityInstance.create("sury", 3))
    assert report.passed and report.lhs == report.rhs == 48
    assert evaluate(IdentityInstance.create("master", 5, a=1, b=1, r=1, c=1)).passed
    report = evaluate(IdentityInstance.create(IdentityId.MARQUES, 2))
    assert report.passed and report.lhs == 54
    assert report.residual == 0 and report.elapsed >= 0


def test_instance_fills_pins_and_rejects_violations():
    inst = IdentityInstance.create("pell-lucas-c", 4, c=-3)
    assert (inst.a, inst.b, inst.r, inst.c) == (2, 6, 2, -3)
    with pytest.raises(UsageError, match="pins r=1"):
        IdentityInstance.create("sury", 3, r=2)
    with pytest.raises(UsageError, match="requires c"):
        IdentityInstance.create("master", 3, a=1, b=1, r=1)
    with pytest.raises(UsageError, match="nonzero"):
        IdentityInstance.create("master", 3, a=1, b=1, r=1, c=0)
    with pytest.raises(UsageError, match="unknown identity"):
        IdentityInstance.create("cassini", 3)
    # matching a pin explicitly is fine
    assert IdentityInstance.create("sury", 1, a=1, c=2).c == 2


def test_report_soundness():
    good = IdentityReport(None, Fraction(3), Fraction(3))
    bad = IdentityReport(None, Fraction(3), Fraction(5, 2))
    assert good.passed and good.residual == 0
    assert not bad.passed and bad.residual == HALF
    assert bad.as_record()["pass"] is False


# -- properties ---------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(params_st, nonzero, st.integers(min_value=0, max_value=25))
def test_master_identity_against_oracle(params, c, m):
    lhs, rhs = lhs_master(params, c, m), rhs_master(params, c, m)
    assert lhs == rhs
    assert rhs == oracles.master_rhs(params.a, params.b, params.r, c, m)
    assert lhs == oracles.master_lhs(params.a, params.b, params.r, c, m)


@settings(max_examples=150, deadline=None)
@given(params_st, nonzero, st.integers(min_value=0, max_value=30))
def test_induction_step(params, c, m):
    u = lambda n: term(params, n)  # noqa: E731
    delta = rhs_master(params, c, m + 1) - rhs_master(params, c, m)
    step = c ** (m + 1) * ((params.r - 1) * u(m + 1) + (c - 1) * u(m + 2) + u(m))
    assert delta == step
    assert c ** (m + 1) * u(m + 1) + step == c ** (m + 2) * u(m + 2)


@settings(max_examples=80, deadline=None)
@given(rationals, rationals, nonzero, st.integers(min_value=0, max_value=20))
def test_specialization_coherence(a, b, c, m):
    fib_like = SequenceParams(a, b, 1)
    pell_like = SequenceParams(a, b, 2)
    assert ids.sides_gen_fib(a, b, c, m) == (lhs_master(fib_like, c, m), rhs_master(fib_like, c, m))
    assert ids.sides_gen_pell(a, b, c, m) == (lhs_master(pell_like, c, m), rhs_master(pell_like, c, m))


@pytest.mark.parametrize("m", range(0, 40, 3))
def test_corollary_coherence(m):
    pell = SequenceParams(1, 2, 2)
    assert ids.sides_sury(m) == (lhs_master(FIBONACCI, 2, m), rhs_master(FIBONACCI, 2, m))
    assert ids.sides_marques(m) == (lhs_master(FIBONACCI, 3, m), rhs_master(FIBONACCI, 3, m))
    assert ids.sides_pell_c2(m) == (lhs_master(pell, 2, m), rhs_master(pell, 2, m))


def test_marques_literal_second_sum():
    # the second sum taken literally from i = 0 equals the one started at i = 1
    for m in range(0, 30):
        from_zero = sum(Fraction(3) ** (i - 1) * oracles.fib(i) for i in range(m + 2))
        from_one = sum(3 ** (i - 1) * oracles.fib(i) for i in range(1, m + 2))
        assert from_zero == from_one
        first = sum(3 ** i * oracles.lucas(i) for i in range(m + 1))
        assert ids.sides_marques(m)[1] == first + from_zero


@pytest.mark.parametrize("identity", list(IdentityId))
def test_every_registry_entry_matches_oracle_summation(identity):
    """Each rhs stream equals a from-scratch summation of the master form at its pins."""
    entry = ids.REGISTRY[identity]
    free = {"a": [Fraction(-2), Fraction(3, 2)], "b": [Fraction(5), Fraction(-1, 3)],
            "r": [Fraction(3), Fraction(-1, 2)], "c": [Fraction(-3), Fraction(2, 3)]}
    axes = [[entry.pins[k]] if k in entry.pins else free[k] for k in ("a", "b", "r", "c")]
    for a, b, r, c in itertools.product(*axes):
        for m in range(8):
            inst = IdentityInstance(identity, a, b, r, c, m)
            report = evaluate(inst)
            assert report.passed
            assert report.rhs == oracles.master_rhs(a, b, r, c, m)


# -- sweeps -------------------------------------------------------------------


def _collect(config, workers=1):
    items = list(sweep(config, workers=workers))
    assert isinstance(items[-1], SweepSummary)
    return items[:-1], items[-1]


def test_sweep_master_grid_all_pass():
    config = SweepConfig(
        IdentityId.MASTER,
        m=tuple(range(17)),
        a=tuple(range(-2, 3)),
        b=tuple(range(-2, 3)),
        r=tuple(range(-1, 4)),
        c=(Fraction(2), HALF, Fraction(-3)),
    )
    reports, summary = _collect(config)
    assert summary == SweepSummary(5 * 5 * 5 * 3 * 17, 5 * 5 * 5 * 3 * 17, 0)
    keys = [(r.instance.a, r.instance.b, r.instance.r, r.instance.c, r.instance.m) for r in reports]
    assert keys == sorted(keys)


def test_sweep_single_point():
    reports, summary = _collect(SweepConfig(IdentityId.SURY, m=(0,)))
    assert len(reports) == 1 and reports[0].passed and reports[0].lhs == 2
    assert (summary.total, summary.failed) == (1, 0)


def test_sweep_marques_hundred():
    reports, summary = _collect(SweepConfig(IdentityId.MARQUES, m=tuple(range(101))))
    assert summary == SweepSummary(101, 101, 0)
    assert [r.instance.m for r in reports] == list(range(101))


def test_sweep_values_match_evaluate():
    config = SweepConfig(IdentityId.GEN_PELL, m=(7, 0, 3), a=(1, -2), b=(HALF,), c=(3, -HALF))
    reports, _ = _collect(config)
    assert [r.instance.m for r in reports[:3]] == [0, 3, 7]
    for report in reports:
        again = evaluate(report.instance)
        assert (again.lhs, again.rhs) == (report.lhs, report.rhs)


def test_sweep_order_independent_of_workers():
    config = SweepConfig(IdentityId.MASTER, m=tuple(range(6)), a=(1, -1), b=(2, 0), r=(0, 1, 2),
                         c=(HALF, 2))
    serial, s1 = _collect(config, workers=1)
    parallel, s2 = _collect(config, workers=2)
    assert s1 == s2
    assert [(r.instance, r.lhs, r.rhs) for r in serial] == [(r.instance, r.lhs, r.rhs) for r in parallel]


@pytest.mark.parametrize(
    "config, message",
    [
        (SweepConfig(IdentityId.SURY, m=()), "empty grid"),
        (SweepConfig(IdentityId.SURY, m=(1,), c=(3,)), "pins c=2"),
        (SweepConfig(IdentityId.MASTER, m=(1,), a=(1,), b=(1,), r=(1,)), "needs values for c"),
        (SweepConfig(IdentityId.FIB_C, m=(1,), c=(1, 0)), "contains 0"),
        (SweepConfig(IdentityId.FIB_C, m=(-1,), c=(1,)), ">= 0"),
        (SweepConfig(IdentityId.FIB_C, m=(1,), c=()), "empty grid"),
    ],
)
def test_sweep_rejects_bad_grid_eagerly(config, message):
    with pytest.raises(UsageError, match=message):
        sweep(config)


def test_parse_values():
    assert ids.parse_values("-2..2") == tuple(map(Fraction, range(-2, 3)))
    assert ids.parse_values("2, 1/2,-3") == (2, HALF, -3)
    assert ids.parse_values("-1/2..3/2") == (-HALF, HALF, Fraction(3, 2))
    assert ids.parse_values("0,5..6") == (0, 5, 6)
    for bad in ["3..1", "1,,2", "x", "1.5"]:
        with pytest.raises(UsageError):
            ids.parse_values(bad)


def test_config_text():
    config = SweepConfig.from_text(
        """
        # master grid
        identity = master
        a = -1..1
        b: 2
        r = 0..1
        c = 2, 1/2
        m = 0..4
        """
    )
    assert config.identity is IdentityId.MASTER
    assert config.a == (-1, 0, 1) and config.b == (2,) and config.c == (2, HALF)
    _, summary = _collect(config)
    assert summary == SweepSummary(3 * 2 * 2 * 5, 60, 0)
    for text in ["identity = sury", "m = 1", "identity = sury\nm = 1\nz = 3", "identity sury\nm=1",
                 "identity = sury\nidentity = sury\nm = 1"]:
        with pytest.raises(UsageError):
            SweepConfig.from_text(text)
