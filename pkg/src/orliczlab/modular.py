r"""Modulars, weighted energies, Luxemburg norms, convergence ladders.

The modular of a field u under a family member phi is

    N_phi(u) = integral of phi(|u(x)|) over the domain,

with |.| the Frobenius magnitude for vector data.  A diverged modular is a
first-class value here (the counterexample fields genuinely have infinite
modulars at some scales), so :class:`ModularValue` carries the verdict
instead of raising.  Exponential overflow is different from divergence and
still raises :class:`orliczlab.nfunc.SaturationError`; the Luxemburg
bracket search is the one place that catches it, because a modular too
large to represent is in particular larger than 1.

Convergence of a sequence u_h toward u is classified four ways on finite
ladders:

* norm:    Luxemburg norms of u_h - u trend to zero,
* mean:    modulars of u_h - u trend to zero,
* modular: modulars of (u_h - u)/lambda trend to zero for some ladder
           lambda (the report records the smallest passing one),
* energy:  |N_phi(u_h) - N_phi(u)| trends to zero.

All flags are trend flags: monotone non-increase (within relative slack
1e-9) with the final entry at or below the tolerance.  True limits are not
computable from finite data, so the report keeps every ladder for
inspection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from orliczlab.field import (
    Field,
    QuadratureSpec,
    Weight,
    _as_resolution,
    integrate,
    magnitude,
)
from orliczlab.nfunc import NFunction, SaturationError

__all__ = [
    "ModularValue",
    "ConvergenceReport",
    "ConvexitySplitReport",
    "modular",
    "weighted_energy",
    "luxemburg_norm",
    "classify_sequence",
    "check_convexity_split",
]

# doubling/halving range for the Luxemburg bracket search
_BRACKET_MAX_EXP = 60

# relative slack when testing monotone non-increase of a ladder
_TREND_SLACK = 1e-9


@dataclass(frozen=True)
class ModularValue:
    """Value of a modular, or a divergence verdict.

    ``value`` is +inf when diverged; ``partial`` keeps the finite sum
    accumulated before the growth detector fired (a lower bound).
    """

    value: float
    diverged: bool
    partial: float
    n_evals: int
    spec: QuadratureSpec

    def __float__(self):
        return self.value

    @property
    def finite(self) -> bool:
        return not self.diverged


def _difference(a: Field, b: Field) -> Field:
    if a.domain != b.domain:
        raise ValueError("fields must share a domain")
    if a.components != b.components:
        raise ValueError("fields must share a component count")
    if a.is_analytic and b.is_analytic:
        fa, fb = a.evaluator, b.evaluator

        def diff(*axes):
            return np.asarray(fa(*axes), dtype=float) - np.asarray(
                fb(*axes), dtype=float
            )

        return Field.analytic(a.domain, diff, components=a.components)
    grid = a.resolution if not a.is_analytic else b.resolution
    va = a.sample(grid)
    vb = b.sample(grid)
    return Field.sampled(a.domain, va - vb, components=a.components)


def modular(phi: NFunction, u: Field, q: QuadratureSpec = None) -> ModularValue:
    """N_phi(u): integral of phi(|u|) over the field's domain."""
    q = q or QuadratureSpec()
    if u.is_analytic:
        ev = u.evaluator
        comps = u.components

        def integrand(*axes):
            vals = np.asarray(ev(*axes), dtype=float)
            return phi.eval(magnitude(vals, comps))

        res = integrate(integrand, u.domain, q)
    else:
        mags = magnitude(u.values, u.components)
        vol = u.domain.cell_volume(u.resolution)
        total = float(np.sum(phi.eval(mags)) * vol)
        res_value, res_diverged, res_evals = total, False, int(mags.size)
        return ModularValue(res_value, res_diverged, res_value, res_evals, q)
    value = math.inf if res.diverged else res.value
    return ModularValue(value, res.diverged, res.value, res.n_evals, q)


def weighted_energy(
    phi: NFunction, w: Weight, Db: Field, q: QuadratureSpec = None
) -> ModularValue:
    """N_{phi,w}(Db): integral of w * phi(|Db|) over a space-time box.

    With w = 1 this reduces to the plain modular of |Db|.
    """
    q = q or QuadratureSpec()
    if Db.is_analytic:
        dom = Db.domain
        grid = _as_resolution(q.resolution, dom.dim)
        vals = Db.sample(grid)
    else:
        dom = Db.domain
        grid = tuple(Db.resolution)
        vals = Db.values
    wvals = w.sample(dom, grid)
    mags = magnitude(vals, Db.components)
    vol = dom.cell_volume(grid)
    total = float(np.sum(wvals * phi.eval(mags)) * vol)
    return ModularValue(total, False, total, int(mags.size), q)


def _modular_at_scale(phi, u, q, lam):
    """N_phi(u / lam), computed by rescaling the family: phi_lam(t) = phi(t/lam)."""
    return modular(phi.scaled(lam), u, q)


def _exceeds_one(phi, u, q, lam) -> bool:
    """Whether N_phi(u/lam) > 1; overflow and divergence both count as 'yes'."""
    try:
        mv = _modular_at_scale(phi, u, q, lam)
    except SaturationError:
        return True
    return mv.diverged or mv.value > 1.0


def _is_numerically_zero(u: Field, q: QuadratureSpec) -> bool:
    # sampled check at quadrature resolution; a field vanishing at every
    # cell center integrates to zero under this rule anyway
    vals = u.sample(None if not u.is_analytic else q.resolution)
    return bool(np.all(vals == 0.0))


def luxemburg_norm(
    phi: NFunction, u: Field, q: QuadratureSpec = None, tol: float = 1e-7
) -> float:
    """inf{lambda > 0 : N_phi(u/lambda) <= 1} by bracket expansion plus
    bisection on the monotone map lambda -> N_phi(u/lambda).

    Returns the feasible (upper) end of the final bracket, so the modular
    at the returned value is <= 1.  Raises ValueError when no lambda up to
    2^60 brings the modular under 1 (u is outside the Orlicz class within
    the searchable range).
    """
    q = q or QuadratureSpec()
    if _is_numerically_zero(u, q):
        return 0.0

    if _exceeds_one(phi, u, q, 1.0):
        lo = 1.0
        hi = None
        lam = 1.0
        for _ in range(_BRACKET_MAX_EXP):
            lam *= 2.0
            if _exceeds_one(phi, u, q, lam):
                lo = lam
            else:
                hi = lam
                break
        if hi is None:
            raise ValueError(
                "Luxemburg bracket failure: modular exceeds 1 for all "
                f"lambda up to 2^{_BRACKET_MAX_EXP}; field is outside the "
                "Orlicz class within the searchable range"
            )
    else:
        hi = 1.0
        lo = None
        lam = 1.0
        for _ in range(_BRACKET_MAX_EXP):
            lam *= 0.5
            if _exceeds_one(phi, u, q, lam):
                lo = lam
                break
            hi = lam
        if lo is None:
            # modular stays below 1 at lambda = 2^-60: numerically zero
            return hi

    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if _exceeds_one(phi, u, q, mid):
            lo = mid
        else:
            hi = mid
    return hi


def _trend_ok(values, tol: float) -> bool:
    vals = [float(v) for v in values]
    if not all(math.isfinite(v) for v in vals):
        return False
    for prev, nxt in zip(vals[:-1], vals[1:]):
        if nxt > prev * (1.0 + _TREND_SLACK) + 1e-15:
            return False
    return vals[-1] <= tol


@dataclass(frozen=True)
class ConvergenceReport:
    """Ladders and trend flags for the four convergence modes."""

    labels: tuple
    lam_ladder: tuple
    mean_ladder: tuple
    norm_ladder: tuple
    modular_ladders: tuple  # one ladder per lambda, aligned with lam_ladder
    energy_gap_ladder: tuple
    modular_of_terms: tuple  # N_phi(u_h) per h
    modular_of_limit: float
    tol: float
    mean_convergent: bool
    norm_convergent: bool
    modular_convergent: bool
    smallest_lambda: float | None
    energy_convergent: bool

    def to_json_dict(self) -> dict:
        def enc(v):
            return "diverged" if not math.isfinite(v) else v

        return {
            "labels": list(self.labels),
            "lambda_ladder": list(self.lam_ladder),
            "mean": [enc(v) for v in self.mean_ladder],
            "norm": [enc(v) for v in self.norm_ladder],
            "modular": {
                format(lam, ".12g"): [enc(v) for v in ladder]
                for lam, ladder in zip(self.lam_ladder, self.modular_ladders)
            },
            "energy_gap": [enc(v) for v in self.energy_gap_ladder],
            "modular_of_terms": [enc(v) for v in self.modular_of_terms],
            "modular_of_limit": enc(self.modular_of_limit),
            "tol": self.tol,
            "flags": {
                "mean": self.mean_convergent,
                "norm": self.norm_convergent,
                "modular": self.modular_convergent,
                "smallest_lambda": self.smallest_lambda,
                "energy": self.energy_convergent,
            },
        }

    def to_csv_rows(self):
        header = ["h", "norm", "mean"]
        header += [f"modular_lam_{format(lam, '.12g')}" for lam in self.lam_ladder]
        header += ["modular_of_term", "energy_gap"]
        rows = [header]
        for i, h in enumerate(self.labels):
            row = [h, self.norm_ladder[i], self.mean_ladder[i]]
            row += [ladder[i] for ladder in self.modular_ladders]
            row += [self.modular_of_terms[i], self.energy_gap_ladder[i]]
            rows.append(row)
        return rows


def _safe_modular_value(phi, u, q, lam=1.0) -> float:
    try:
        mv = _modular_at_scale(phi, u, q, lam)
    except SaturationError:
        return math.inf
    return mv.value


def classify_sequence(
    phi: NFunction,
    us,
    u: Field,
    lam_ladder,
    q: QuadratureSpec = None,
    tol: float = 1e-3,
    labels=None,
) -> ConvergenceReport:
    """Classify the convergence of us toward u in the four modes.

    ``labels`` names the ladder indices (defaults to 1..n) and must be
    strictly increasing.  A diverged modular marks its mode as failed at
    that index instead of raising.
    """
    q = q or QuadratureSpec()
    lam_ladder = tuple(float(lam) for lam in lam_ladder)
    if not lam_ladder:
        raise ValueError("lambda ladder must be nonempty")
    if any(lam <= 0.0 for lam in lam_ladder):
        raise ValueError("lambda ladder entries must be positive")
    us = list(us)
    if labels is None:
        labels = tuple(range(1, len(us) + 1))
    labels = tuple(float(h) for h in labels)
    if len(labels) != len(us):
        raise ValueError("labels must match the sequence length")
    if any(b <= a for a, b in zip(labels[:-1], labels[1:])):
        raise ValueError("index ladder must be strictly increasing")

    mean_ladder = []
    norm_ladder = []
    modular_ladders = [[] for _ in lam_ladder]
    energy_gaps = []
    modular_terms = []

    limit_modular = _safe_modular_value(phi, u, q)
    for uh in us:
        d = _difference(uh, u)
        mean_ladder.append(_safe_modular_value(phi, d, q))
        for j, lam in enumerate(lam_ladder):
            modular_ladders[j].append(_safe_modular_value(phi, d, q, lam))
        try:
            norm_ladder.append(luxemburg_norm(phi, d, q))
        except ValueError:
            norm_ladder.append(math.inf)
        term_modular = _safe_modular_value(phi, uh, q)
        modular_terms.append(term_modular)
        energy_gaps.append(abs(term_modular - limit_modular))

    mean_ok = _trend_ok(mean_ladder, tol)
    norm_ok = _trend_ok(norm_ladder, tol)
    energy_ok = _trend_ok(energy_gaps, tol)
    smallest = None
    for lam, ladder in sorted(zip(lam_ladder, modular_ladders)):
        if _trend_ok(ladder, tol):
            smallest = lam
            break
    return ConvergenceReport(
        labels=labels,
        lam_ladder=lam_ladder,
        mean_ladder=tuple(mean_ladder),
        norm_ladder=tuple(norm_ladder),
        modular_ladders=tuple(tuple(lad) for lad in modular_ladders),
        energy_gap_ladder=tuple(energy_gaps),
        modular_of_terms=tuple(modular_terms),
        modular_of_limit=limit_modular,
        tol=tol,
        mean_convergent=mean_ok,
        norm_convergent=norm_ok,
        modular_convergent=smallest is not None,
        smallest_lambda=smallest,
        energy_convergent=energy_ok,
    )


@dataclass(frozen=True)
class ConvexitySplitReport:
    """Check of N_{phi_2}(f+g) <= 1/2 N_phi(f) + 1/2 N_phi(g)
    with phi_2(t) = phi(t/2)."""

    lhs: float
    rhs: float
    gap: float
    passed: bool


def check_convexity_split(
    phi: NFunction, f: Field, g: Field, q: QuadratureSpec = None
) -> ConvexitySplitReport:
    q = q or QuadratureSpec()
    s = _difference(f, _scale_field(g, -1.0))  # f + g
    lhs = _safe_modular_value(phi.scaled(2.0), s, q)
    rhs = 0.5 * _safe_modular_value(phi, f, q) + 0.5 * _safe_modular_value(phi, g, q)
    if math.isinf(rhs):
        passed = True  # vacuous: the bound is infinite
        gap = math.inf
    else:
        gap = rhs - lhs
        passed = lhs <= rhs * (1.0 + 1e-10) + 1e-12
    return ConvexitySplitReport(lhs=lhs, rhs=rhs, gap=gap, passed=passed)


def _scale_field(f: Field, c: float) -> Field:
    if f.is_analytic:
        ev = f.evaluator
        return Field.analytic(
            f.domain, lambda *axes: c * np.asarray(ev(*axes), dtype=float),
            components=f.components,
        )
    return Field.sampled(f.domain, c * f.values, components=f.components)
