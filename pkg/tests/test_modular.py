import json
import math

import numpy as np
import pytest

from orliczlab.field import Domain, Field, QuadratureSpec, Weight
from orliczlab.modular import (
    check_convexity_split,
    classify_sequence,
    luxemburg_norm,
    modular,
    weighted_energy,
)
from orliczlab.nfunc import ExpStar, Power, SaturationError, TildeExp, invert

UNIT = Domain(((0.0, 1.0),))
SYM = Domain(((-1.0, 1.0),))
TILDE = TildeExp(gamma=0.0)  # exp(s) - 1 - s
E = math.e


def half_log_field():
    # u(x) = log(1/sqrt(x)) on (0,1)
    return Field.analytic(UNIT, lambda x: -0.5 * np.log(x))


def log_kink_field():
    # u'(x) = log(1/(e sqrt|x|)) inside |x| < 1/e, zero outside
    def up(x):
        inner = np.abs(x) < 1.0 / E
        out = np.zeros_like(x)
        out[inner] = -1.0 - 0.5 * np.log(np.abs(x[inner]))
        return out

    return Field.analytic(SYM, up)


# ----------------------------------------------------------------- modular


def test_modular_zero_field():
    fld = Field.sampled(UNIT, np.zeros(32))
    mv = modular(ExpStar(), fld)
    assert mv.value == 0.0
    assert not mv.diverged


def test_modular_half_log_closed_form():
    # integral of (x^{-1/2} - 1 + log(sqrt x)) over (0,1) = 2 - 1 - 1/2
    q = QuadratureSpec(singularities=(0.0,), grading_depth=20)
    mv = modular(TILDE, half_log_field(), q)
    assert not mv.diverged
    assert mv.value == pytest.approx(0.5, abs=1e-3)


def test_modular_log_kink_finite_and_doubled_diverges():
    q = QuadratureSpec(singularities=(-1.0 / E, 0.0, 1.0 / E), grading_depth=20)
    fld = log_kink_field()
    mv = modular(TILDE, fld, q)
    assert not mv.diverged
    assert mv.value > 0.0

    doubled = Field.analytic(SYM, lambda x: 2.0 * fld.evaluator(x))
    mv2 = modular(TILDE, doubled, q)
    assert mv2.diverged
    assert mv2.value == math.inf
    assert mv2.partial > 0.0


def test_modular_nonnegative_when_finite():
    rng = np.random.default_rng(5)
    fld = Field.sampled(UNIT, rng.normal(size=64))
    mv = modular(ExpStar(), fld)
    assert mv.value >= 0.0


def test_modular_vector_field_uses_frobenius():
    vals = np.zeros((16, 2))
    vals[:, 0] = 0.3
    vals[:, 1] = 0.4
    fld = Field.sampled(UNIT, vals, components=2)
    mv = modular(Power(p=2.0), fld)
    assert mv.value == pytest.approx(0.25, rel=1e-12)


def test_modular_saturation_propagates():
    fld = Field.sampled(UNIT, np.full(8, 800.0))
    with pytest.raises(SaturationError):
        modular(ExpStar(), fld)


# ---------------------------------------------------------- weighted energy


def test_weighted_energy_zero_gradient():
    Db = Field.sampled(
        Domain(((0.0, 1.0), (0.0, 1.0))), np.zeros((8, 8, 1)), components=1
    )
    mv = weighted_energy(ExpStar(), Weight.one(), Db)
    assert mv.value == 0.0


def test_weighted_energy_weight_one_reduces_to_modular():
    box = Domain(((0.0, 1.0), (0.0, 1.0)))
    rng = np.random.default_rng(9)
    vals = rng.uniform(0.0, 2.0, size=(12, 12, 1))
    Db = Field.sampled(box, vals, components=1)
    scalar = Field.sampled(box, vals[..., 0])
    a = weighted_energy(ExpStar(), Weight.one(), Db)
    b = modular(ExpStar(), scalar)
    assert a.value == pytest.approx(b.value, rel=1e-14)


def test_weighted_energy_self_convergence():
    # b(t,x) = t sin(x) on (0,1)x(0,pi): the spatial gradient has
    # magnitude t|cos x|; compare midpoint sums at two resolutions
    box = Domain(((0.0, 1.0), (0.0, math.pi)))
    Db = Field.analytic(
        box,
        lambda t, x: (t * np.cos(x))[..., None],
        components=1,
    )
    coarse = weighted_energy(ExpStar(), Weight.one(), Db, QuadratureSpec(resolution=256))
    fine = weighted_energy(ExpStar(), Weight.one(), Db, QuadratureSpec(resolution=1024))
    assert coarse.value == pytest.approx(fine.value, abs=1e-4)


def test_weighted_energy_positive_weight_enforced():
    box = Domain(((0.0, 1.0), (0.0, 1.0)))
    Db = Field.sampled(box, np.ones((8, 8, 1)), components=1)
    w = Weight(evaluator=lambda t, x: x - 2.0, name="negative")
    with pytest.raises(ValueError):
        weighted_energy(ExpStar(), w, Db)


# ------------------------------------------------------------ luxemburg norm


def test_luxemburg_zero_field():
    fld = Field.sampled(UNIT, np.zeros(16))
    assert luxemburg_norm(ExpStar(), fld) == 0.0


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_luxemburg_power_family_is_p_norm(p):
    rng = np.random.default_rng(int(p))
    vals = rng.uniform(-2.0, 2.0, size=128)
    fld = Field.sampled(UNIT, vals)
    tol = 1e-7
    norm = luxemburg_norm(Power(p=p), fld, tol=tol)
    cellvol = 1.0 / 128.0
    pnorm = (np.sum(np.abs(vals) ** p) * cellvol) ** (1.0 / p)
    assert norm == pytest.approx(pnorm, rel=2e-7)


def test_luxemburg_constant_field_closed_form():
    # lambda* = c / phi^{-1}(1/V) on a domain of measure V
    dom = Domain(((0.0, 2.0),))
    c = 3.0
    fld = Field.sampled(dom, np.full(64, c))
    norm = luxemburg_norm(ExpStar(), fld, tol=1e-9)
    expected = c / invert(ExpStar(), 0.5)
    assert norm == pytest.approx(expected, rel=1e-7)


def test_luxemburg_homogeneity():
    rng = np.random.default_rng(21)
    vals = rng.uniform(0.0, 1.5, size=100)
    fld = Field.sampled(UNIT, vals)
    tol = 1e-7
    base = luxemburg_norm(ExpStar(), fld, tol=tol)
    for c in (0.5, 2.0, 10.0):
        scaled = Field.sampled(UNIT, c * vals)
        got = luxemburg_norm(ExpStar(), scaled, tol=tol)
        assert abs(got - c * base) <= 2.0 * tol * max(1.0, c * base)


def test_luxemburg_triangle_inequality():
    rng = np.random.default_rng(33)
    tol = 1e-7
    for _ in range(5):
        f = rng.normal(size=80)
        g = rng.normal(size=80)
        nf = luxemburg_norm(ExpStar(), Field.sampled(UNIT, f), tol=tol)
        ng = luxemburg_norm(ExpStar(), Field.sampled(UNIT, g), tol=tol)
        nfg = luxemburg_norm(ExpStar(), Field.sampled(UNIT, f + g), tol=tol)
        assert nfg <= nf + ng + 2.0 * tol


def test_luxemburg_feasibility_of_returned_value():
    rng = np.random.default_rng(41)
    vals = rng.uniform(0.0, 3.0, size=64)
    fld = Field.sampled(UNIT, vals)
    lam = luxemburg_norm(ExpStar(), fld)
    mv = modular(ExpStar().scaled(lam), fld)
    assert mv.value <= 1.0 + 1e-12


def test_luxemburg_bracket_failure_signals_non_orlicz():
    fld = Field.analytic(UNIT, lambda x: 1.0 / x)
    q = QuadratureSpec(singularities=(0.0,), grading_depth=16)
    with pytest.raises(ValueError, match="bracket"):
        luxemburg_norm(Power(p=1.0), fld, q)


def test_modular_monotone_in_lambda():
    rng = np.random.default_rng(55)
    fld = Field.sampled(UNIT, rng.uniform(0.0, 2.0, size=64))
    lams = [0.5, 1.0, 2.0, 4.0]
    vals = [modular(ExpStar().scaled(lam), fld).value for lam in lams]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


# ----------------------------------------------------------- classification


def test_classify_identical_sequence_all_flags():
    u = Field.sampled(UNIT, np.linspace(0.0, 1.0, 32))
    rep = classify_sequence(ExpStar(), [u, u, u], u, [1.0, 0.5], tol=1e-6)
    assert rep.mean_convergent
    assert rep.norm_convergent
    assert rep.modular_convergent
    assert rep.energy_convergent
    assert rep.smallest_lambda == 0.5
    assert all(v == 0.0 for v in rep.mean_ladder)
    assert all(v == 0.0 for v in rep.norm_ladder)


def test_classify_shrinking_constants_all_flags():
    u = Field.analytic(UNIT, lambda x: x)
    hs = [10.0, 100.0, 1000.0]
    us = [
        Field.analytic(UNIT, lambda x, h=h: x + 1.0 / h) for h in hs
    ]
    rep = classify_sequence(ExpStar(), us, u, [1.0, 0.5], labels=hs, tol=1e-2)
    assert rep.mean_convergent
    assert rep.norm_convergent
    assert rep.modular_convergent
    assert rep.energy_convergent


def test_classify_norm_implies_mean():
    # consistency of trend flags on the same data
    u = Field.analytic(UNIT, lambda x: np.sin(x))
    us = [Field.analytic(UNIT, lambda x, h=h: np.sin(x) + 1.0 / h) for h in (10, 100)]
    rep = classify_sequence(ExpStar(), us, u, [1.0], labels=[10, 100], tol=0.05)
    if rep.norm_convergent:
        assert rep.mean_convergent


def test_classify_doubling_instance_energy_flag():
    # if 2 u_h is mean convergent to 2 u then u_h is energy convergent
    u = Field.analytic(UNIT, lambda x: x)
    hs = [10.0, 100.0, 1000.0]
    us = [Field.analytic(UNIT, lambda x, h=h: x + 1.0 / h) for h in hs]
    doubled_us = [Field.analytic(UNIT, lambda x, h=h: 2.0 * (x + 1.0 / h)) for h in hs]
    doubled_u = Field.analytic(UNIT, lambda x: 2.0 * x)
    rep2 = classify_sequence(
        ExpStar(), doubled_us, doubled_u, [1.0], labels=hs, tol=1e-2
    )
    rep1 = classify_sequence(ExpStar(), us, u, [1.0], labels=hs, tol=1e-2)
    assert rep2.mean_convergent
    assert rep1.energy_convergent


def test_classify_diverged_entry_fails_mode():
    u = Field.analytic(UNIT, lambda x: np.zeros_like(x))
    bad = Field.analytic(UNIT, lambda x: -3.0 * np.log(x))
    q = QuadratureSpec(singularities=(0.0,), grading_depth=16)
    rep = classify_sequence(TILDE, [bad, bad], u, [1.0], q=q, tol=1e-3)
    # modular of 3 log(1/x) under exp(s)-1-s contains x^{-3}: diverged
    assert math.isinf(rep.mean_ladder[0])
    assert not rep.mean_convergent


def test_classify_input_validation():
    u = Field.sampled(UNIT, np.zeros(8))
    with pytest.raises(ValueError):
        classify_sequence(ExpStar(), [u], u, [])
    with pytest.raises(ValueError):
        classify_sequence(ExpStar(), [u, u], u, [1.0], labels=[2.0, 1.0])


def test_report_serialization_round_trip():
    u = Field.sampled(UNIT, np.linspace(0.0, 0.5, 16))
    us = [u, u]
    rep = classify_sequence(ExpStar(), us, u, [1.0, 0.5], tol=1e-6)
    blob = json.dumps(rep.to_json_dict(), sort_keys=True)
    again = json.loads(blob)
    assert again["flags"]["mean"] is True
    rows = rep.to_csv_rows()
    assert rows[0][0] == "h"
    assert len(rows) == 3  # header + 2 entries
    assert len(rows[1]) == len(rows[0])


# -------------------------------------------------------- convexity split


def test_convexity_split_equal_fields_equality():
    f = half_log_field()
    q = QuadratureSpec(singularities=(0.0,), grading_depth=18)
    rep = check_convexity_split(TILDE, f, f, q)
    # phi_2(|2f|) = phi(|f|) pointwise, so both sides integrate identically
    assert rep.passed
    assert rep.lhs == pytest.approx(rep.rhs, rel=1e-12)


def test_convexity_split_zero_partner():
    f = half_log_field()
    zero = Field.analytic(UNIT, lambda x: np.zeros_like(x))
    q = QuadratureSpec(singularities=(0.0,), grading_depth=18)
    rep = check_convexity_split(TILDE, f, zero, q)
    assert rep.passed
    assert rep.gap > 0.0


def test_convexity_split_example_pair_strict_gap():
    # f = log(1/sqrt x); g = log(1 + f_h) at h = 100
    h = 100.0
    log_h = math.log(h)

    def f_h(x):
        inner = x < 1.0 / h
        out = np.where(inner, 2.0 * math.sqrt(h) / log_h, x ** -0.5 / log_h)
        return out

    f = half_log_field()
    g = Field.analytic(UNIT, lambda x: np.log1p(f_h(x)))
    q = QuadratureSpec(singularities=(0.0, 1.0 / h), grading_depth=18)
    rep = check_convexity_split(TILDE, f, g, q)
    assert rep.passed
    assert rep.gap > 0.0
