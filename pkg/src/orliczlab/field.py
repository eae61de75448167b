r"""Domains, discrete fields, weights, and graded midpoint quadrature.

Geometry is deliberately small: open intervals (a, b) and open boxes
(a, b) x (c, d).  For space-time boxes the first axis is time.  All grids
are cell-centered, which keeps every evaluation point strictly inside the
open domain and away from boundary singularities.

Quadrature is composite midpoint with optional dyadic grading toward
flagged singular locations (1-D only).  A graded run toward a point s on a
piece of width w evaluates level chunks

    [s + w 2^{-k-1},  s + w 2^{-k}],    k = 0 .. depth-1,

each with a fixed number of midpoint subcells, then closes the innermost
remainder [s, s + w 2^{-depth}] with the same composite midpoint rule (it
is never dropped).  Divergence is detected from the level contributions:
when the innermost consecutive level sums have stopped decaying (their
ratios all at or above the growth threshold), the result is flagged as
diverged rather than silently truncated.  Exponential
overflow inside an integrand is not divergence; it raises
:class:`orliczlab.nfunc.SaturationError` out of the quadrature loop.

The additivity contract is grid-aligned: splitting an interval at a cell
boundary and adding the halves reproduces the unsplit value to float
round-off, because the evaluation points coincide.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Domain",
    "Field",
    "Weight",
    "QuadratureSpec",
    "IntegralResult",
    "integrate",
    "finite_diff_gradient",
    "magnitude",
    "restrict",
    "write_field_csv",
    "read_field_csv",
]


@dataclass(frozen=True)
class Domain:
    """Open interval or open box; bounds is ((a, b),) or ((t0, t1), (x0, x1))."""

    bounds: tuple

    def __post_init__(self):
        bnds = tuple(tuple(float(v) for v in ab) for ab in self.bounds)
        object.__setattr__(self, "bounds", bnds)
        if len(bnds) not in (1, 2):
            raise ValueError("only intervals and 2-D boxes are supported")
        for a, b in bnds:
            if not b > a:
                raise ValueError(f"degenerate axis bounds ({a}, {b})")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def volume(self) -> float:
        v = 1.0
        for a, b in self.bounds:
            v *= b - a
        return v

    def axes(self, resolution):
        """Cell-center coordinates along each axis."""
        res = _as_resolution(resolution, self.dim)
        out = []
        for (a, b), n in zip(self.bounds, res):
            h = (b - a) / n
            out.append(a + h * (np.arange(n) + 0.5))
        return tuple(out)

    def meshgrid(self, resolution):
        return np.meshgrid(*self.axes(resolution), indexing="ij")

    def cell_volume(self, resolution) -> float:
        res = _as_resolution(resolution, self.dim)
        v = 1.0
        for (a, b), n in zip(self.bounds, res):
            v *= (b - a) / n
        return v


def _as_resolution(resolution, dim):
    if np.isscalar(resolution):
        res = (int(resolution),) * dim
    else:
        res = tuple(int(n) for n in resolution)
    if len(res) != dim:
        raise ValueError(f"resolution rank {len(res)} does not match dim {dim}")
    if any(n < 1 for n in res):
        raise ValueError("resolution must be at least one cell per axis")
    return res


@dataclass
class Field:
    """A scalar or vector field over a Domain.

    Exactly one representation is populated: ``evaluator`` (analytic,
    numpy-vectorized over meshgrid arrays, optionally with a registered
    ``gradient`` evaluator returning components along the last axis) or
    ``values`` (cell-centered samples; vector components along the last
    axis when ``components > 0``).
    """

    domain: Domain
    evaluator: object = None
    gradient: object = None
    values: np.ndarray = None
    resolution: tuple = None
    components: int = 0
    name: str = ""

    @classmethod
    def analytic(cls, domain, fn, gradient=None, components=0, name=""):
        return cls(
            domain=domain,
            evaluator=fn,
            gradient=gradient,
            components=components,
            name=name,
        )

    @classmethod
    def sampled(cls, domain, values, components=0, name=""):
        arr = np.asarray(values, dtype=float)
        grid_shape = arr.shape[:-1] if components else arr.shape
        if len(grid_shape) != domain.dim:
            raise ValueError(
                f"sample rank {len(grid_shape)} does not match domain dim {domain.dim}"
            )
        if components and arr.shape[-1] != components:
            raise ValueError("components does not match trailing axis")
        return cls(
            domain=domain,
            values=arr,
            resolution=grid_shape,
            components=components,
            name=name,
        )

    @property
    def is_analytic(self) -> bool:
        return self.evaluator is not None

    def sample(self, resolution=None) -> np.ndarray:
        """Cell-centered samples.  Sampled fields only serve their own grid;
        there is no silent interpolation."""
        if self.is_analytic:
            if resolution is None:
                raise ValueError("analytic field needs a resolution to sample")
            mesh = self.domain.meshgrid(resolution)
            out = np.asarray(self.evaluator(*mesh), dtype=float)
            return out
        if resolution is not None:
            res = _as_resolution(resolution, self.domain.dim)
            if res != tuple(self.resolution):
                raise ValueError(
                    f"sampled field holds grid {tuple(self.resolution)}, "
                    f"cannot serve {res}"
                )
        return self.values

    def sample_gradient(self, resolution=None) -> np.ndarray:
        if self.is_analytic and self.gradient is not None:
            mesh = self.domain.meshgrid(resolution)
            return np.asarray(self.gradient(*mesh), dtype=float)
        raise ValueError("no registered gradient; use finite_diff_gradient")


@dataclass
class Weight:
    """Positive weight on a domain.  ``time_dependence`` records whether the
    evaluator actually reads the time axis (axis 0 of a box)."""

    evaluator: object
    time_dependence: bool = False
    name: str = ""

    @classmethod
    def one(cls):
        return cls(evaluator=lambda *axes: np.ones_like(axes[0]), name="1")

    def sample(self, domain: Domain, resolution) -> np.ndarray:
        mesh = domain.meshgrid(resolution)
        vals = np.asarray(self.evaluator(*mesh), dtype=float)
        vals = np.broadcast_to(vals, mesh[0].shape).copy()
        if np.any(vals <= 0.0):
            raise ValueError(f"weight {self.name or '<anon>'} is not positive")
        return vals


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution and grading policy for graded midpoint quadrature."""

    resolution: int = 1024
    singularities: tuple = ()
    grading_depth: int = 20
    cells_per_level: int = 64
    growth_ratio: float = 0.95
    growth_consecutive: int = 3

    def __post_init__(self):
        object.__setattr__(
            self, "singularities", tuple(float(s) for s in self.singularities)
        )
        if self.resolution < 1 or self.cells_per_level < 1:
            raise ValueError("resolutions must be positive")
        if self.grading_depth < 1:
            raise ValueError("grading depth must be positive")
        if not 0.0 < self.growth_ratio <= 1.0:
            raise ValueError("growth ratio must lie in (0, 1]")


@dataclass(frozen=True)
class IntegralResult:
    """Value of a quadrature run plus its divergence verdict.

    When ``diverged`` is True the value is the partial sum accumulated
    before the growth detector fired; treat it as a lower bound on an
    infinite quantity, not as an approximation.
    """

    value: float
    diverged: bool
    n_evals: int

    def __float__(self):
        return self.value


def _midpoint_1d(fn, a, b, n):
    h = (b - a) / n
    x = a + h * (np.arange(n) + 0.5)
    vals = np.asarray(fn(x), dtype=float)
    return float(np.sum(vals) * h), n


def _graded_toward(fn, s, far, spec: QuadratureSpec):
    """Integrate fn over the interval between s and far, grading toward s.

    ``far`` may be on either side of s.  Returns (value, diverged, n_evals).
    Divergence is judged on the innermost levels: transient growth away
    from the singular point is normal (integrands often start near zero),
    so the flag is raised only when the final ``growth_consecutive`` level
    ratios all sit at or above ``growth_ratio``, i.e. the contributions
    have stopped decaying by the time the levels run out.
    """
    sign = 1.0 if far > s else -1.0
    w = abs(far - s)
    total = 0.0
    n_evals = 0
    levels = []
    depth = spec.grading_depth
    for k in range(depth):
        hi = s + sign * w * 0.5**k
        lo = s + sign * w * 0.5 ** (k + 1)
        left, right = (lo, hi) if sign > 0 else (hi, lo)
        level, ne = _midpoint_1d(fn, left, right, spec.cells_per_level)
        n_evals += ne
        if not np.isfinite(level):
            # overflowed level sum: the partial total is a lower bound
            return total, True, n_evals
        total += level
        levels.append(level)

    need = spec.growth_consecutive
    if len(levels) > need:
        tail_ratios = []
        for prev, nxt in zip(levels[-need - 1 : -1], levels[-need:]):
            if abs(prev) > 0.0:
                tail_ratios.append(abs(nxt) / abs(prev))
            else:
                tail_ratios.append(math.inf if abs(nxt) > 0.0 else 0.0)
        if all(r >= spec.growth_ratio for r in tail_ratios):
            return total, True, n_evals

    # innermost remainder, same composite midpoint rule
    hi = s + sign * w * 0.5**depth
    left, right = (s, hi) if sign > 0 else (hi, s)
    rem, ne = _midpoint_1d(fn, left, right, spec.cells_per_level)
    n_evals += ne
    if not np.isfinite(rem):
        return total, True, n_evals
    return total + rem, False, n_evals


def _integrate_interval(fn, a, b, spec: QuadratureSpec):
    sings = sorted(s for s in spec.singularities if a <= s <= b)
    if not sings:
        val, ne = _midpoint_1d(fn, a, b, spec.resolution)
        return val, False, ne

    # split at interior singular points; endpoints just mark grading
    cuts = [a] + [s for s in sings if a < s < b] + [b]
    singular = set(sings)
    total, diverged, n_evals = 0.0, False, 0
    for p, q in zip(cuts[:-1], cuts[1:]):
        left_sing = p in singular
        right_sing = q in singular
        if left_sing and right_sing:
            mid = 0.5 * (p + q)
            for s_pt, far in ((p, mid), (q, mid)):
                v, d, ne = _graded_toward(fn, s_pt, far, spec)
                total += v
                diverged = diverged or d
                n_evals += ne
        elif left_sing:
            v, d, ne = _graded_toward(fn, p, q, spec)
            total += v
            diverged = diverged or d
            n_evals += ne
        elif right_sing:
            v, d, ne = _graded_toward(fn, q, p, spec)
            total += v
            diverged = diverged or d
            n_evals += ne
        else:
            v, ne = _midpoint_1d(fn, p, q, spec.resolution)
            total += v
            n_evals += ne
    return total, diverged, n_evals


def integrate(target, domain: Domain = None, spec: QuadratureSpec = None):
    """Integrate a callable or a Field over its domain.

    Callables receive meshgrid coordinate arrays (one per axis).  Sampled
    fields integrate as cell sums on their own grid; grading applies only
    to analytic 1-D integrands.
    """
    spec = spec or QuadratureSpec()
    if isinstance(target, Field):
        fld = target
        domain = fld.domain
        if not fld.is_analytic:
            if spec.singularities:
                raise ValueError("cannot grade a sampled field")
            vals = fld.values
            if fld.components:
                raise ValueError("integrate expects a scalar field")
            vol = domain.cell_volume(fld.resolution)
            return IntegralResult(float(np.sum(vals) * vol), False, int(vals.size))
        fn = fld.evaluator
    else:
        fn = target
        if domain is None:
            raise ValueError("integrating a callable requires a domain")

    if domain.dim == 1:
        (a, b), = domain.bounds
        val, div, ne = _integrate_interval(lambda x: fn(x), a, b, spec)
        return IntegralResult(val, div, ne)

    if spec.singularities:
        raise ValueError("grading toward singular points is 1-D only")
    res = _as_resolution(spec.resolution, domain.dim)
    mesh = domain.meshgrid(res)
    vals = np.asarray(fn(*mesh), dtype=float)
    vol = domain.cell_volume(res)
    return IntegralResult(float(np.sum(vals) * vol), False, int(vals.size))


def magnitude(values: np.ndarray, components: int = 0) -> np.ndarray:
    """Pointwise Frobenius magnitude: |v| along the trailing component axis
    for vector data, absolute value for scalars."""
    arr = np.asarray(values, dtype=float)
    if components:
        return np.sqrt(np.sum(arr**2, axis=-1))
    return np.abs(arr)


def finite_diff_gradient(fld: Field, resolution=None, step: float = 1e-6) -> Field:
    """Gradient of a scalar field.

    Sampled fields use central differences in the interior and one-sided
    differences at boundary cells on their own grid.  Analytic fields
    return the registered gradient when present, otherwise a central
    difference of the evaluator with the given step.
    """
    if fld.components:
        raise ValueError("gradient is defined here for scalar fields only")
    dim = fld.domain.dim
    if fld.is_analytic:
        if fld.gradient is not None:
            return Field.analytic(
                fld.domain,
                fld.gradient,
                components=dim,
                name=f"grad({fld.name})" if fld.name else "",
            )
        ev = fld.evaluator

        def grad(*axes):
            parts = []
            for i in range(dim):
                hi = [a + (step if j == i else 0.0) for j, a in enumerate(axes)]
                lo = [a - (step if j == i else 0.0) for j, a in enumerate(axes)]
                parts.append((ev(*hi) - ev(*lo)) / (2.0 * step))
            return np.stack(np.broadcast_arrays(*parts), axis=-1)

        return Field.analytic(
            fld.domain, grad, components=dim, name=f"grad({fld.name})"
        )

    vals = fld.values
    spacings = [
        (b - a) / n for (a, b), n in zip(fld.domain.bounds, fld.resolution)
    ]
    parts = np.gradient(vals, *spacings, edge_order=1)
    if dim == 1:
        parts = [parts]
    grad_vals = np.stack(parts, axis=-1)
    return Field.sampled(
        fld.domain,
        grad_vals,
        components=dim,
        name=f"grad({fld.name})" if fld.name else "",
    )


def restrict(fld: Field, bounds) -> Field:
    """Restrict a field to a subdomain.

    Analytic fields just swap the domain.  Sampled fields require the new
    bounds to land on cell boundaries (within 1e-9 of a cell width) so the
    restriction is an exact slice; anything else would silently resample.
    """
    sub = Domain(tuple(tuple(ab) for ab in bounds))
    if sub.dim != fld.domain.dim:
        raise ValueError("restriction must preserve dimension")
    for (a, b), (sa, sb) in zip(fld.domain.bounds, sub.bounds):
        if sa < a - 1e-12 or sb > b + 1e-12:
            raise ValueError("restriction bounds exceed the field domain")
    if fld.is_analytic:
        return Field(
            domain=sub,
            evaluator=fld.evaluator,
            gradient=fld.gradient,
            components=fld.components,
            name=fld.name,
        )
    slices = []
    for (a, b), n, (sa, sb) in zip(fld.domain.bounds, fld.resolution, sub.bounds):
        h = (b - a) / n
        i0 = (sa - a) / h
        i1 = (sb - a) / h
        if abs(i0 - round(i0)) > 1e-9 or abs(i1 - round(i1)) > 1e-9:
            raise ValueError(
                "sampled restriction bounds must align with cell boundaries"
            )
        slices.append(slice(int(round(i0)), int(round(i1))))
    vals = fld.values[tuple(slices)]
    return Field.sampled(sub, vals, components=fld.components, name=fld.name)


# ------------------------------------------------------------------ file I/O
#
# CSV carries coordinates-then-values rows in row-major order; the sidecar
# JSON (same path + ".json") holds the structural descriptor so a file pair
# round-trips to an identical sampled field.

_AXIS_NAMES = {1: ("x",), 2: ("t", "x")}


def write_field_csv(fld: Field, path: str) -> None:
    if fld.is_analytic:
        raise ValueError("only sampled fields are written to CSV; sample first")
    axes = fld.domain.axes(fld.resolution)
    names = _AXIS_NAMES[fld.domain.dim]
    m = fld.components
    value_cols = [f"value_{i}" for i in range(m)] if m else ["value"]
    mesh = np.meshgrid(*axes, indexing="ij")
    flat_coords = [g.ravel() for g in mesh]
    vals = fld.values.reshape(-1, m) if m else fld.values.reshape(-1, 1)
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(names) + value_cols)
        for i in range(vals.shape[0]):
            row = [format(c[i], ".17g") for c in flat_coords]
            row += [format(v, ".17g") for v in vals[i]]
            writer.writerow(row)
    sidecar = {
        "name": fld.name,
        "bounds": [list(ab) for ab in fld.domain.bounds],
        "resolution": list(fld.resolution),
        "components": m,
        "layout": "cell-centered",
    }
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_field_csv(path: str) -> Field:
    with open(path + ".json") as fh:
        sidecar = json.load(fh)
    domain = Domain(tuple(tuple(ab) for ab in sidecar["bounds"]))
    res = tuple(sidecar["resolution"])
    m = int(sidecar["components"])
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    arr = np.asarray(rows, dtype=float)
    ncoord = domain.dim
    vals = arr[:, ncoord:]
    shape = res + (m,) if m else res
    values = vals.reshape(shape)
    return Field.sampled(
        domain, values, components=m, name=str(sidecar.get("name", ""))
    )
