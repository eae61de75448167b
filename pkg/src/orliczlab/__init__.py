"""orliczlab: numerical laboratory for Orlicz modulars, Luxemburg norms,
and weighted-energy smoothing of discrete vector fields."""

from orliczlab.field import (
    Domain,
    Field,
    IntegralResult,
    QuadratureSpec,
    Weight,
    finite_diff_gradient,
    integrate,
    magnitude,
    read_field_csv,
    restrict,
    write_field_csv,
)
from orliczlab.modular import (
    ConvergenceReport,
    ConvexitySplitReport,
    ModularValue,
    check_convexity_split,
    classify_sequence,
    luxemburg_norm,
    modular,
    weighted_energy,
)
from orliczlab.nfunc import (
    ExpAlpha,
    ExpStar,
    MAX_EXP_ARG,
    NFunction,
    Power,
    RawExp,
    SaturationError,
    TildeExp,
    check_submultiplicativity,
    check_weak_subadditivity,
    classify_delta2,
    find_tau0,
    invert,
    parse_nfunction,
)
from orliczlab.report import (
    render_ladder_figure,
    write_csv,
    write_json,
    write_run,
    write_scenario_run,
)
from orliczlab.scenarios import (
    CheckResult,
    ExpectedOutcome,
    Scenario,
    ScenarioReport,
    build_field_recipe,
    build_weight_recipe,
    list_scenarios,
    run_energy_to_modular,
    run_example_ex,
    run_example_w1k,
    run_orlicz_sobolev_demo,
    run_scenario,
)
from orliczlab.smooth import (
    ExhaustionCover,
    JensenReport,
    Mollifier,
    PartitionOfUnity,
    PlanFailure,
    SmoothedField,
    SmoothingLadderReport,
    SmoothingPlan,
    build_cover,
    build_partition,
    check_jensen_step,
    choose_radii,
    smooth,
    time_mollify,
    verify_energy_convergence,
)

__all__ = [
    "CheckResult",
    "ConvergenceReport",
    "ConvexitySplitReport",
    "Domain",
    "ExhaustionCover",
    "ExpAlpha",
    "ExpStar",
    "ExpectedOutcome",
    "Field",
    "IntegralResult",
    "JensenReport",
    "MAX_EXP_ARG",
    "ModularValue",
    "Mollifier",
    "NFunction",
    "PartitionOfUnity",
    "PlanFailure",
    "Power",
    "QuadratureSpec",
    "RawExp",
    "SaturationError",
    "Scenario",
    "ScenarioReport",
    "SmoothedField",
    "SmoothingLadderReport",
    "SmoothingPlan",
    "TildeExp",
    "Weight",
    "build_cover",
    "build_field_recipe",
    "build_partition",
    "build_weight_recipe",
    "check_convexity_split",
    "check_jensen_step",
    "check_submultiplicativity",
    "check_weak_subadditivity",
    "choose_radii",
    "classify_delta2",
    "classify_sequence",
    "finite_diff_gradient",
    "find_tau0",
    "integrate",
    "invert",
    "list_scenarios",
    "luxemburg_norm",
    "magnitude",
    "modular",
    "parse_nfunction",
    "read_field_csv",
    "render_ladder_figure",
    "restrict",
    "run_energy_to_modular",
    "run_example_ex",
    "run_example_w1k",
    "run_orlicz_sobolev_demo",
    "run_scenario",
    "smooth",
    "time_mollify",
    "verify_energy_convergence",
    "weighted_energy",
    "write_csv",
    "write_field_csv",
    "write_json",
    "write_run",
    "write_scenario_run",
]

__version__ = "0.1.0"
