r"""Young-function families and their pointwise calculus.

Every family here is a nonnegative convex function on [0, oo) used as the
integrand generator of a modular.  The central family is the sub-exponential
generator

    E_{gamma,tau}(t) = exp(t / (log(t + tau))^gamma),    0 <= gamma <= 1, tau > 1,

together with its normalizations:

* ``exp_star``  : E_{gamma,tau}(t) - 1                    (vanishes at 0)
* ``tilde_exp`` : E_{gamma,tau}(t) - 1 - t/(log tau)^gamma (vanishes to first order)
* ``exp``       : the raw generator itself (E(0) = 1; not an N-function,
                  kept for submultiplicativity work)
* ``power``     : t^p, p >= 1 (classical comparison family, used as a test
                  oracle because its Luxemburg norm is a plain p-norm)
* ``exp_alpha`` : exp(alpha t) - 1, alpha > 0

Derivatives of the generator are closed-form.  With L = log(t + tau),

    E'(t) = E(t) (L - gamma t/(t+tau)) / L^{gamma+1}

    E''(t) = E(t)/L^{2 gamma + 2} * [ (L - gamma t/(t+tau))^2
             - L^{gamma+1} (gamma tau + gamma (t+tau)) / (t+tau)^2
             + gamma (gamma+1) t L^gamma / (t+tau)^2 ]

E'' is strictly positive, hence the generator strictly convex, once tau
exceeds a threshold tau0 defined as the unique root of

    g(tau) = log(tau) - 2 (log(tau)/tau + 1)

which lies in (11, 12); ``find_tau0`` locates it by bisection.

Exponential evaluations that would overflow float64 raise
:class:`SaturationError` instead of returning ``inf`` so that quadrature
code downstream stays honest about truncation.

Each family carries a ``scale`` field: the scaled function is
phi_lambda(t) = phi(t / lambda).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace

import numpy as np

# Largest argument exp() can take in float64 before overflowing.
MAX_EXP_ARG = 709.0


class SaturationError(ArithmeticError):
    """An exponential evaluation left the representable float64 range."""


def _prepare(t):
    """Coerce to a float array, rejecting negative arguments."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("N-function arguments must be nonnegative")
    return arr, np.isscalar(t) or arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


def _checked_exp(arg):
    if np.any(arg > MAX_EXP_ARG):
        bad = float(np.max(arg))
        raise SaturationError(
            f"exp argument {bad:.6g} exceeds float64 range (max {MAX_EXP_ARG})"
        )
    return np.exp(arg)


def _checked_expm1(arg):
    # exp(arg) - 1 without the cancellation that makes exp(t) - 1 - t
    # negative dust for t below sqrt(eps)
    if np.any(arg > MAX_EXP_ARG):
        bad = float(np.max(arg))
        raise SaturationError(
            f"exp argument {bad:.6g} exceeds float64 range (max {MAX_EXP_ARG})"
        )
    return np.expm1(arg)


@dataclass(frozen=True, kw_only=True)
class NFunction:
    """Base class: scaling, descriptor plumbing, shared argument checks."""

    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0.0:
            raise ValueError("scale must be positive")

    # subclasses implement the unscaled versions
    def _eval(self, t):
        raise NotImplementedError

    def _deriv1(self, t):
        raise NotImplementedError

    def _deriv2(self, t):
        raise NotImplementedError

    def eval(self, t):
        arr, scalar = _prepare(t)
        return _ret(self._eval(arr / self.scale), scalar)

    def __call__(self, t):
        return self.eval(t)

    def deriv1(self, t):
        arr, scalar = _prepare(t)
        return _ret(self._deriv1(arr / self.scale) / self.scale, scalar)

    def deriv2(self, t):
        arr, scalar = _prepare(t)
        return _ret(self._deriv2(arr / self.scale) / self.scale**2, scalar)

    def scaled(self, lam: float) -> "NFunction":
        """Return phi_lambda with phi_lambda(t) = phi(t / lam)."""
        return replace(self, scale=self.scale * lam)

    @property
    def strictly_convex(self) -> bool:
        """Family flag: the derivative is strictly increasing on (0, oo).

        Conservative for the log-damped exponential families: with
        gamma > 0 the flag holds from the convexity threshold tau0 on and
        is reported False below it even where convexity might survive.
        """
        return True

    def descriptor(self) -> str:
        raise NotImplementedError

    def _suffix(self) -> str:
        return f",scale={self.scale:.12g}" if self.scale != 1.0 else ""


def _validate_gamma_tau(gamma, tau):
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    if tau <= 1.0:
        raise ValueError(f"tau must exceed 1, got {tau}")


def _require_deriv_domain(gamma, tau):
    # the closed-form derivative positivity analysis needs tau > e when the
    # logarithmic damping is active
    if gamma > 0.0 and tau <= math.e:
        raise ValueError(f"derivatives need tau > e when gamma > 0, got tau={tau}")


@functools.lru_cache(maxsize=1)
def _convexity_threshold() -> float:
    return find_tau0()


def _exp_family_strictly_convex(gamma: float, tau: float) -> bool:
    if gamma == 0.0:
        return True
    return tau >= _convexity_threshold()


def _gen_eval(t, gamma, tau):
    L = np.log(t + tau)
    return _checked_exp(t / L**gamma)


def _gen_eval_m1(t, gamma, tau):
    L = np.log(t + tau)
    return _checked_expm1(t / L**gamma)


def _gen_deriv1(t, gamma, tau):
    L = np.log(t + tau)
    E = _checked_exp(t / L**gamma)
    return E * (L - gamma * t / (t + tau)) / L ** (gamma + 1.0)


def _gen_deriv2(t, gamma, tau):
    L = np.log(t + tau)
    E = _checked_exp(t / L**gamma)
    A = L - gamma * t / (t + tau)
    bracket = (
        A**2
        - L ** (gamma + 1.0) * (gamma * tau + gamma * (t + tau)) / (t + tau) ** 2
        + gamma * (gamma + 1.0) * t * L**gamma / (t + tau) ** 2
    )
    return E / L ** (2.0 * gamma + 2.0) * bracket


@dataclass(frozen=True, kw_only=True)
class RawExp(NFunction):
    """Sub-exponential generator exp(t / (log(t + tau))^gamma).

    Takes the value 1 at t = 0, so it is a generator rather than an
    N-function; use :class:`ExpStar` for modular work.
    """

    gamma: float = 0.0
    tau: float = math.e**2

    def __post_init__(self):
        super().__post_init__()
        _validate_gamma_tau(self.gamma, self.tau)

    def _eval(self, t):
        return _gen_eval(t, self.gamma, self.tau)

    def _deriv1(self, t):
        _require_deriv_domain(self.gamma, self.tau)
        return _gen_deriv1(t, self.gamma, self.tau)

    def _deriv2(self, t):
        _require_deriv_domain(self.gamma, self.tau)
        return _gen_deriv2(t, self.gamma, self.tau)

    def descriptor(self):
        return f"exp:gamma={self.gamma:.12g},tau={self.tau:.12g}" + self._suffix()

    @property
    def strictly_convex(self):
        return _exp_family_strictly_convex(self.gamma, self.tau)


@dataclass(frozen=True, kw_only=True)
class ExpStar(NFunction):
    """exp(t / (log(t + tau))^gamma) - 1; the model case gamma = 0 is exp(t) - 1."""

    gamma: float = 0.0
    tau: float = math.e**2

    def __post_init__(self):
        super().__post_init__()
        _validate_gamma_tau(self.gamma, self.tau)

    def _eval(self, t):
        return _gen_eval_m1(t, self.gamma, self.tau)

    def _deriv1(self, t):
        _require_deriv_domain(self.gamma, self.tau)
        return _gen_deriv1(t, self.gamma, self.tau)

    def _deriv2(self, t):
        _require_deriv_domain(self.gamma, self.tau)
        return _gen_deriv2(t, self.gamma, self.tau)

    def descriptor(self):
        if self.gamma == 0.0 and self.scale == 1.0:
            return "exp_star"
        return f"exp_star:gamma={self.gamma:.12g},tau={self.tau:.12g}" + self._suffix()

    @property
    def strictly_convex(self):
        return _exp_family_strictly_convex(self.gamma, self.tau)


@dataclass(frozen=True, kw_only=True)
class TildeExp(NFunction):
    """exp(t/(log(t+tau))^gamma) - 1 - t/(log tau)^gamma.

    Subtracting the linear term makes the function vanish to first order at
    the origin, which keeps small arguments in the quadratic regime; its
    first derivative vanishes at 0.
    """

    gamma: float = 0.0
    tau: float = math.e**2

    def __post_init__(self):
        super().__post_init__()
        _validate_gamma_tau(self.gamma, self.tau)

    def _slope(self):
        return 1.0 / math.log(self.tau) ** self.gamma

    def _eval(self, t):
        return _gen_eval_m1(t, self.gamma, self.tau) - t * self._slope()

    def _deriv1(self, t):
        _require_deriv_domain(self.gamma, self.tau)
        return _gen_deriv1(t, self.gamma, self.tau) - self._slope()

    def _deriv2(self, t):
        _require_deriv_domain(self.gamma, self.tau)
        return _gen_deriv2(t, self.gamma, self.tau)

    def descriptor(self):
        return f"tilde_exp:gamma={self.gamma:.12g},tau={self.tau:.12g}" + self._suffix()

    @property
    def strictly_convex(self):
        return _exp_family_strictly_convex(self.gamma, self.tau)


@dataclass(frozen=True, kw_only=True)
class Power(NFunction):
    """t^p with p >= 1.  Luxemburg norms under this family reduce to p-norms."""

    p: float = 2.0

    def __post_init__(self):
        super().__post_init__()
        if self.p < 1.0:
            raise ValueError(f"power exponent must be >= 1, got {self.p}")

    def _eval(self, t):
        return t**self.p

    def _deriv1(self, t):
        if self.p == 1.0:
            return np.ones_like(t)
        return self.p * t ** (self.p - 1.0)

    def _deriv2(self, t):
        if self.p == 1.0:
            return np.zeros_like(t)
        with np.errstate(divide="ignore"):
            return self.p * (self.p - 1.0) * t ** (self.p - 2.0)

    def descriptor(self):
        return f"power:p={self.p:.12g}" + self._suffix()

    @property
    def strictly_convex(self):
        return self.p > 1.0


@dataclass(frozen=True, kw_only=True)
class ExpAlpha(NFunction):
    """exp(alpha t) - 1 with alpha > 0.

    For alpha >= 1 these majorize exp_star; no single member dominates the
    whole sub-exponential scale, which is what makes the scale useful.
    """

    alpha: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def _eval(self, t):
        return _checked_expm1(self.alpha * t)

    def _deriv1(self, t):
        return self.alpha * _checked_exp(self.alpha * t)

    def _deriv2(self, t):
        return self.alpha**2 * _checked_exp(self.alpha * t)

    def descriptor(self):
        return f"exp_alpha:alpha={self.alpha:.12g}" + self._suffix()


_FAMILIES = {
    "exp": RawExp,
    "exp_star": ExpStar,
    "tilde_exp": TildeExp,
    "power": Power,
    "exp_alpha": ExpAlpha,
}


def parse_nfunction(descriptor: str) -> NFunction:
    """Build a family member from a descriptor like ``exp_star`` or
    ``tilde_exp:gamma=1,tau=15``.  Unknown families or parameters are
    rejected, never ignored."""
    text = descriptor.strip()
    name, _, params = text.partition(":")
    if name not in _FAMILIES:
        raise ValueError(
            f"unknown N-function family {name!r}; known: {sorted(_FAMILIES)}"
        )
    kwargs = {}
    if params:
        for item in params.split(","):
            key, sep, val = item.partition("=")
            key = key.strip()
            if not sep:
                raise ValueError(f"malformed parameter {item!r} in {descriptor!r}")
            try:
                kwargs[key] = float(val)
            except ValueError:
                raise ValueError(f"non-numeric value for {key!r} in {descriptor!r}")
    cls = _FAMILIES[name]
    allowed = set(cls.__dataclass_fields__)
    unknown = set(kwargs) - allowed
    if unknown:
        raise ValueError(
            f"unknown parameters {sorted(unknown)} for family {name!r}"
        )
    return cls(**kwargs)


def bisect_root(f, lo: float, hi: float, tol: float = 1e-9, max_iter: int = 200):
    """Bisection for a sign change of ``f`` on [lo, hi].

    Returns (root, f(root)).  Raises ValueError when the endpoints do not
    bracket a sign change.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo, flo
    if fhi == 0.0:
        return hi, fhi
    if flo * fhi > 0.0:
        raise ValueError("bisect_root endpoints must bracket a sign change")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0 or (hi - lo) < tol:
            return mid, fmid
        if flo * fmid < 0.0:
            hi, fhi = mid, fmid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi), f(0.5 * (lo + hi))


def find_tau0(tol: float = 1e-9) -> float:
    """Smallest shift tau beyond which the sub-exponential generator is
    strictly convex for every gamma in [0, 1].

    Root of g(tau) = log(tau) - 2 (log(tau)/tau + 1); g is increasing for
    tau > 1 and changes sign between 11 and 12.
    """

    def g(tau):
        lt = math.log(tau)
        return lt - 2.0 * (lt / tau + 1.0)

    root, _ = bisect_root(g, 4.0, 24.0, tol=tol)
    return root


def invert(phi: NFunction, y: float, tol: float = 1e-12) -> float:
    """Inverse of a monotone family member on [0, oo): t with phi(t) = y."""
    if y < 0.0:
        raise ValueError("cannot invert a nonnegative function at a negative value")
    if y == 0.0:
        return 0.0
    hi = 1.0
    for _ in range(200):
        try:
            if phi.eval(hi) >= y:
                break
        except SaturationError:
            break
        hi *= 2.0
    else:
        raise ValueError("inversion bracket expansion failed")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        try:
            val = phi.eval(mid)
        except SaturationError:
            hi = mid
            continue
        if val < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class InequalityReport:
    """Outcome of a sampled inequality audit."""

    n_pairs: int
    max_excess: float
    worst_pair: tuple
    passed: bool
    detail: str = ""


def check_weak_subadditivity(
    phi: NFunction, k: float, pairs, rel_tol: float = 1e-12
) -> InequalityReport:
    """Audit phi(a + b) <= k [phi(a) phi(b) + phi(a) + phi(b)] on sample pairs.

    The comparison is relative: a pair fails only when the left side exceeds
    the right by more than ``rel_tol * (1 + rhs)``.
    """
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("pairs must be an (n, 2) array")
    a, b = arr[:, 0], arr[:, 1]
    lhs = phi.eval(a + b)
    pa, pb = phi.eval(a), phi.eval(b)
    rhs = k * (pa * pb + pa + pb)
    excess = (lhs - rhs) / (1.0 + np.abs(rhs))
    idx = int(np.argmax(excess))
    worst = (float(a[idx]), float(b[idx]))
    max_excess = float(excess[idx])
    return InequalityReport(
        n_pairs=len(arr),
        max_excess=max_excess,
        worst_pair=worst,
        passed=bool(max_excess <= rel_tol),
        detail=f"k={k}",
    )


def check_submultiplicativity(
    gamma: float, tau: float, pairs, tol: float = 1e-12
) -> InequalityReport:
    """Audit E(t + s) <= E(t) E(s) for the raw generator.

    Checked in exponent space, u(t+s) <= u(t) + u(s) with
    u(t) = t / (log(t + tau))^gamma, which is the same inequality through the
    monotone exp and stays finite where the product side would overflow.
    """
    _validate_gamma_tau(gamma, tau)
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("pairs must be an (n, 2) array")
    t, s = arr[:, 0], arr[:, 1]
    if np.any(arr < 0.0):
        raise ValueError("pairs must be nonnegative")

    def u(x):
        return x / np.log(x + tau) ** gamma

    excess = u(t + s) - (u(t) + u(s))
    scale = 1.0 + np.abs(u(t) + u(s))
    rel = excess / scale
    idx = int(np.argmax(rel))
    max_excess = float(rel[idx])
    return InequalityReport(
        n_pairs=len(arr),
        max_excess=max_excess,
        worst_pair=(float(t[idx]), float(s[idx])),
        passed=bool(max_excess <= tol),
        detail=f"gamma={gamma},tau={tau}",
    )


@dataclass(frozen=True)
class Delta2Report:
    """Doubling behaviour of a family member over a sampled range."""

    label: str
    max_ratio: float
    tail_max_ratio: float
    t_lo: float
    t_hi: float
    n_samples: int
    ratio_cap: float
    finite_measure: bool
    regular_pair: bool


def classify_delta2(
    phi: NFunction,
    t_lo: float,
    t_hi: float,
    n_samples: int = 512,
    ratio_cap: float = 1e4,
    finite_measure: bool = False,
) -> Delta2Report:
    """Classify doubling growth phi(2t)/phi(t) over [t_lo, t_hi].

    The verdict is range-limited by construction: ``delta2-global`` when the
    ratio stays below ``ratio_cap`` with no growth at the right end,
    ``delta2-near-infinity`` when only the upper quarter of the range is
    controlled, ``no-delta2-on-range`` otherwise.  With ``finite_measure``
    the near-infinity verdict is flagged as a regular pair (doubling beyond
    a threshold is all a finite-measure modular sees).
    """
    if t_lo <= 0.0:
        raise ValueError("range must not touch 0 where phi vanishes")
    if t_hi <= t_lo:
        raise ValueError("empty sample range")
    grid = np.geomspace(t_lo, t_hi, n_samples)
    try:
        ratios = phi.eval(2.0 * grid) / phi.eval(grid)
        max_ratio = float(np.max(ratios))
        tail = ratios[3 * n_samples // 4 :]
        tail_max = float(np.max(tail))
        growing_tail = bool(ratios[-1] > 1.02 * ratios[max(0, n_samples // 2)])
    except SaturationError:
        max_ratio = math.inf
        tail_max = math.inf
        growing_tail = True

    if max_ratio <= ratio_cap and not growing_tail:
        label = "delta2-global"
    elif tail_max <= ratio_cap and max_ratio > ratio_cap:
        label = "delta2-near-infinity"
    else:
        label = "no-delta2-on-range"
    regular = bool(finite_measure and label in ("delta2-global", "delta2-near-infinity"))
    return Delta2Report(
        label=label,
        max_ratio=max_ratio,
        tail_max_ratio=tail_max,
        t_lo=t_lo,
        t_hi=t_hi,
        n_samples=n_samples,
        ratio_cap=ratio_cap,
        finite_measure=finite_measure,
        regular_pair=regular,
    )
