import json
import math

import numpy as np
import pytest

from orliczlab.nfunc import Power, TildeExp, find_tau0
from orliczlab.scenarios import (
    ENERGY_TO_MODULAR_RECIPES,
    ORLICZ_SOBOLEV_RECIPES,
    SCENARIOS,
    W1K_EXP_PART_EXACT,
    build_field_recipe,
    build_weight_recipe,
    ex_int_f_fh_exact,
    ex_int_fh_exact,
    list_scenarios,
    run_energy_to_modular,
    run_example_ex,
    run_example_w1k,
    run_orlicz_sobolev_demo,
    run_scenario,
)

# ---------------------------------------------------------------- registry


def test_registry_lists_all_scenarios_sorted():
    names = [sc.name for sc in list_scenarios()]
    assert names == sorted(SCENARIOS)
    assert set(names) == {
        "example_ex",
        "example_w1k",
        "energy_to_modular",
        "orlicz_sobolev",
    }


def test_registry_defaults_round_trip():
    for sc in list_scenarios():
        cfg = sc.default_config()
        assert list(cfg) == [k for k, _ in sc.defaults]
        # defaults are plain JSON-serializable values
        json.dumps(cfg)


def test_unknown_scenario_rejected_with_known_names():
    with pytest.raises(ValueError, match="unknown scenario"):
        run_scenario("no_such_scenario")


def test_unknown_config_field_rejected_not_ignored():
    with pytest.raises(ValueError, match="unknown configuration fields"):
        run_scenario("example_w1k", {"grading_depht": 12})


def test_field_and_weight_recipes_reject_unknown_names():
    with pytest.raises(ValueError, match="tsin3x"):
        build_field_recipe("no_such_field")
    with pytest.raises(ValueError, match="one"):
        build_weight_recipe("no_such_weight")


def test_field_recipe_gradients_are_stacked_pairs():
    b = build_field_recipe("tsin3x")
    g = b.gradient(np.array([0.25]), np.array([0.5]))
    assert g.shape == (1, 2)
    # d/dt (t sin 3x) = sin 3x, d/dx = 3 t cos 3x
    assert g[0, 0] == pytest.approx(math.sin(1.5))
    assert g[0, 1] == pytest.approx(0.75 * math.cos(1.5))


# ----------------------------------------------------------- closed forms


def test_example_integral_closed_forms_match_antiderivatives():
    # int f f_h = 4/log h + 1; head piece 2 sqrt{h}/log h * 2/sqrt{h} = 4/log h
    for h in (100.0, 1e4):
        lh = math.log(h)
        assert ex_int_f_fh_exact(h) == pytest.approx(4.0 / lh + 1.0, rel=1e-15)
        head = (2.0 * math.sqrt(h) / lh) * (1.0 / h)
        tail = (2.0 - 2.0 / math.sqrt(h)) / lh
        assert ex_int_fh_exact(h) == pytest.approx(head + tail, rel=1e-14)
    assert ex_int_fh_exact(1e4) == pytest.approx(0.2171, abs=5e-5)


def test_w1k_exp_part_constant():
    assert W1K_EXP_PART_EXACT == pytest.approx(4.0 * math.exp(-1.5), rel=1e-15)


# ------------------------------------------------------------- example runs


def test_example_ex_short_ladder_passes():
    rep = run_example_ex(h_ladder=(100, 1000, 10000))
    assert rep.passed, [c.quantity for c in rep.checks if not c.passed]
    assert rep.summary["classification"]["mean"] is True
    assert rep.summary["classification"]["energy"] is False
    # gap sits above 1 and heads down toward it
    assert rep.summary["energy_gap_final"] > 1.0


def test_example_ex_rejects_bad_ladders():
    with pytest.raises(ValueError, match="at least two"):
        run_example_ex(h_ladder=(100,))
    with pytest.raises(ValueError, match="increasing"):
        run_example_ex(h_ladder=(1000, 100))
    with pytest.raises(ValueError, match=">= 10"):
        run_example_ex(h_ladder=(2, 4))


def test_example_w1k_flags_and_exp_part():
    rep = run_example_w1k(grading_depth=18)
    assert rep.passed, [c.quantity for c in rep.checks if not c.passed]
    by_name = {c.quantity: c for c in rep.checks}
    assert by_name["modular_finite"].observed is True
    assert by_name["modular_doubled_diverged"].observed is True
    assert by_name["exp_part_inner"].observed == pytest.approx(
        W1K_EXP_PART_EXACT, abs=1e-4
    )


def test_energy_to_modular_identity_recipe_gaps_vanish():
    rep = run_energy_to_modular(recipe="identity")
    assert rep.passed
    assert max(rep.summary["half_gradient_modular"]) <= 1e-15


def test_energy_to_modular_drift_recipe_closed_form():
    rep = run_energy_to_modular(recipe="inverse_linear_drift", phi="power:p=2")
    assert rep.passed, [c.quantity for c in rep.checks if not c.passed]
    gaps = rep.summary["half_gradient_modular"]
    assert all(b < a for a, b in zip(gaps[:-1], gaps[1:]))


def test_energy_to_modular_rejects_non_strictly_convex_family():
    assert not Power(p=1.0).strictly_convex
    with pytest.raises(ValueError, match="strictly convex"):
        run_energy_to_modular(recipe="identity", phi="power:p=1")
    with pytest.raises(ValueError, match="unknown recipe"):
        run_energy_to_modular(recipe="no_such_recipe")
    assert "tsin3x_smoothing" in ENERGY_TO_MODULAR_RECIPES


def test_energy_to_modular_default_family_is_strictly_convex():
    phi = TildeExp(gamma=0.0, tau=2.0 * find_tau0())
    assert phi.strictly_convex


# ---------------------------------------------------------------- reports


def test_report_json_dict_is_serializable_and_deterministic():
    rep1 = run_example_w1k(grading_depth=14)
    rep2 = run_example_w1k(grading_depth=14)
    d1, d2 = rep1.to_json_dict(), rep2.to_json_dict()
    s1 = json.dumps(d1, sort_keys=True)
    s2 = json.dumps(d2, sort_keys=True)
    assert s1 == s2
    # divergent observations encode as the string marker, not inf/nan
    assert "Infinity" not in s1 and "NaN" not in s1


def test_report_tables_have_header_rows():
    rep = run_energy_to_modular(recipe="identity")
    for rows in rep.tables.values():
        assert rows and all(isinstance(h, str) for h in rows[0])
        assert all(len(r) == len(rows[0]) for r in rows[1:])


def test_scenario_overrides_reach_the_runner():
    rep = run_scenario("energy_to_modular", {"recipe": "identity"})
    assert rep.config["recipe"] == "identity"
    assert rep.passed


# --------------------------------------------------- smoothing-route smoke


@pytest.mark.slow
def test_orlicz_sobolev_demo_xlog_smoke():
    assert set(ORLICZ_SOBOLEV_RECIPES) == {"linear", "xlog", "w1k_half"}
    rep = run_orlicz_sobolev_demo(recipe="xlog", deltas=(1e-1, 1e-2))
    assert rep.passed, [c.quantity for c in rep.checks if not c.passed]
    header = rep.tables["ladder"][0]
    assert header[-1] == "luxemburg_norm_of_difference"
    norms = rep.summary["norm_ladder_recorded"]
    assert len(norms) == 2 and all(math.isfinite(v) for v in norms)


@pytest.mark.slow
def test_orlicz_sobolev_demo_rejects_unknown_recipe():
    with pytest.raises(ValueError, match="unknown recipe"):
        run_orlicz_sobolev_demo(recipe="cubic")
