"""Problem data (f, g, X), presets, assumption checks and closed-form constants."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import AssumptionViolated
from .scene import LatticeModel, expect_step, relative


@dataclass(frozen=True)
class DriftSpec:
    """Drift f(t, y, l), strictly decreasing in l with slopes in [k, K]."""

    fn: Callable
    lipschitz_y: float
    lower_slope: float
    upper_slope: float
    name: str = "custom"
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if not self.lower_slope > 0:
            raise ValueError("lower slope k must be positive")
        if self.upper_slope < self.lower_slope:
            raise ValueError("upper slope K must be >= k")
        if self.lipschitz_y < 0:
            raise ValueError("lipschitz_y must be >= 0")

    def __call__(self, t, y, l):
        return self.fn(t, y, l)


@dataclass(frozen=True)
class DiffusionSpec:
    fn: Callable
    lipschitz_y: float
    name: str = "custom"
    params: Mapping = field(default_factory=dict)
    identically_zero: bool = False

    def __call__(self, t, y):
        return self.fn(t, y)


@dataclass(frozen=True)
class BoundarySpec:
    """Upper obstacle X_t = phi(t, W_t); the terminal value is xi = X_T.

    ``uses_w=False`` marks deterministic boundaries so their slices stay
    collapsed to shape (1, 1).
    """

    phi: Callable
    uses_w: bool = False
    name: str = "custom"
    params: Mapping = field(default_factory=dict)

    def process(self, model: LatticeModel, dense: bool = False) -> list:
        out = []
        for i in range(model.steps + 1):
            t = model.t(i)
            if self.uses_w:
                vals = np.asarray(self.phi(t, model.w_path_values(i)), dtype=float)
                vals = np.broadcast_to(vals, (2**i, 1))
            else:
                vals = np.full((1, 1), float(self.phi(t, 0.0)))
            out.append(np.array(model.full(vals, i)) if dense else np.array(vals))
        return out

    def shifted(self, c: float) -> "BoundarySpec":
        base = self.phi
        params = dict(self.params)
        params["shift"] = params.get("shift", 0.0) + c
        return BoundarySpec(lambda t, w: base(t, w) + c, self.uses_w, self.name, params)


# presets ------------------------------------------------------------------

def linear_drift(a: float = 0.0, b: float = 1.0, c: float = 0.0, *, k=None, K=None, lipschitz_y=None) -> DriftSpec:
    """f(t, y, l) = a - b*l + c*y."""
    if b <= 0:
        raise ValueError("linear drift needs b > 0 to be strictly decreasing in l")
    return DriftSpec(
        fn=lambda t, y, l: a - b * l + c * y,
        lipschitz_y=abs(c) if lipschitz_y is None else lipschitz_y,
        lower_slope=b if k is None else k,
        upper_slope=b if K is None else K,
        name="linear",
        params={"a": a, "b": b, "c": c},
    )


def affine_diffusion(d: float = 0.0, e: float = 0.0, *, lipschitz_y=None) -> DiffusionSpec:
    """g(t, y) = d + e*y."""
    return DiffusionSpec(
        fn=lambda t, y: d + e * np.asarray(y, dtype=float),
        lipschitz_y=abs(e) if lipschitz_y is None else lipschitz_y,
        name="affine_g",
        params={"d": d, "e": e},
        identically_zero=(d == 0 and e == 0),
    )


def zero_diffusion() -> DiffusionSpec:
    return affine_diffusion(0.0, 0.0)


def constant_boundary(level: float = 0.0) -> BoundarySpec:
    return BoundarySpec(lambda t, w: level, False, "constant", {"level": level})


def ramp_boundary(beta: float = 2.0, cap: float = 1.0) -> BoundarySpec:
    """X_t = min(beta*t, cap)."""
    return BoundarySpec(lambda t, w: min(beta * t, cap), False, "ramp", {"beta": beta, "cap": cap})


def convex_boundary(scale: float = 1.0) -> BoundarySpec:
    """X_t = scale * t**2."""
    return BoundarySpec(lambda t, w: scale * t * t, False, "convex", {"scale": scale})


FUNCTIONALS = {
    "w": lambda t, w: w,
    "w2": lambda t, w: w * w,
    "abs_w": lambda t, w: np.abs(w),
    "cos_w": lambda t, w: np.cos(w),
    "w_plus_t": lambda t, w: w + t,
}


def lattice_functional(phi, scale: float = 1.0) -> BoundarySpec:
    """X_t = scale * phi(t, W_t); ``phi`` is a callable or a name from FUNCTIONALS."""
    name = phi if isinstance(phi, str) else getattr(phi, "__name__", "custom")
    fn = FUNCTIONALS[phi] if isinstance(phi, str) else phi
    return BoundarySpec(
        lambda t, w: scale * fn(t, w), True, "lattice_functional", {"phi": name, "scale": scale}
    )


def lipschitz(f: DriftSpec, g: DiffusionSpec) -> float:
    """The single Lipschitz-in-y constant covering both coefficients."""
    return max(f.lipschitz_y, g.lipschitz_y)


# constants ------------------------------------------------------------------

def contraction_constant(f: DriftSpec, g: DiffusionSpec, T: float) -> float:
    L = lipschitz(f, g)
    ratio = f.upper_slope / f.lower_slope
    return 2 * T * L * (1 + math.sqrt(2) * ratio * (1 + math.sqrt(T))) + L * math.sqrt(2 * T)


def stability_constant(f: DriftSpec, g: DiffusionSpec, T: float) -> float:
    L = lipschitz(f, g)
    ratio = f.upper_slope / f.lower_slope
    return math.sqrt(6) * T * L * (1 + math.sqrt(3) * ratio * (1 + math.sqrt(T))) + L * math.sqrt(3 * T)


# assumption checks -------------------------------------------------------------

@dataclass
class AssumptionReport:
    gamma_estimate: float
    gamma_ratio_part: float
    gamma_f00_part: float
    monotonicity_ok: bool
    slope_band_ok: bool
    lipschitz_ok: bool
    boundary_bound_ok: bool
    witnesses: dict = field(default_factory=dict)
    stopping_family: str = "deterministic grid pairs"

    @property
    def ok(self) -> bool:
        return self.monotonicity_ok and self.slope_band_ok and self.lipschitz_ok and self.boundary_bound_ok

    def to_summary(self) -> dict:
        out = {
            "gamma_hat": self.gamma_estimate,
            "gamma_ratio_part": self.gamma_ratio_part,
            "gamma_f00_part": self.gamma_f00_part,
            "monotonicity_ok": self.monotonicity_ok,
            "slope_band_ok": self.slope_band_ok,
            "lipschitz_ok": self.lipschitz_ok,
            "boundary_bound_ok": self.boundary_bound_ok,
            "gamma_family": self.stopping_family,
        }
        for key, w in sorted(self.witnesses.items()):
            out[f"witness.{key}"] = repr(w)
        return out


def default_probes(model: LatticeModel, l_range=(-4.0, 4.0), n_l: int = 17, ys=(-1.0, 0.0, 1.0)) -> list:
    ls = np.linspace(l_range[0], l_range[1], n_l)
    return [(float(t), float(y), float(l)) for t in model.grid.times for y in ys for l in ls]


STOPPING_FAMILIES = ("grid", "grid+hitting")


def stopped_moments(model: LatticeModel, procs: list, i: int, *, end: int | None = None,
                    ref: list | None = None, level: float | None = None, weights=None):
    """Conditional moments at time i for tau = min(end, first j > i with |ref_j - ref_i| >= level).

    Returns ``(E[P_tau | i] for P in procs, E[tau - t_i | i], E[sum_{i<=u<tau} w_{u+1} dt | i])``,
    each a time-i path slice.  Without ``ref`` tau is the deterministic time ``end``.
    """
    n = model.steps
    dt = model.dt
    end = n if end is None else end
    w = np.zeros(n + 1) if weights is None else np.asarray(weights, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(w[1:] * dt)])  # cum[j] = sum_{u<j} w_{u+1} dt
    ref_i = relative(ref[i], i) if ref is not None else None
    vals = [relative(p[end], i) for p in procs]
    span = np.full((1, 1, 1), (end - i) * dt)
    acc = np.full((1, 1, 1), cum[end] - cum[i])
    for j in range(end - 1, i, -1):
        vals = [expect_step(v) for v in vals]
        span, acc = expect_step(span), expect_step(acc)
        if ref is not None:
            hit = np.abs(relative(ref[j], i) - ref_i) >= level
            vals = [np.where(hit, relative(p[j], i), v) for p, v in zip(procs, vals)]
            span = np.where(hit, (j - i) * dt, span)
            acc = np.where(hit, cum[j] - cum[i], acc)
    vals = [expect_step(v)[0] for v in vals]
    return vals, expect_step(span)[0], expect_step(acc)[0]


def stopping_pairs(model: LatticeModel, family: str = "grid", levels=(), ref: list | None = None):
    """Yield (i, keyword arguments for :func:`stopped_moments`) for a stopping family."""
    if family not in STOPPING_FAMILIES:
        raise ValueError(f"unknown stopping family {family!r}")
    n = model.steps
    for i in range(n):
        for j in range(i + 1, n + 1):
            yield i, {"end": j}
        if family == "grid+hitting" and ref is not None:
            for level in levels:
                yield i, {"ref": ref, "level": level}


def gamma_ratio(model: LatticeModel, X: list, g: DiffusionSpec, family: str = "grid", levels=()) -> float:
    """sup over the family of |E[X_tau - X_i]| / E[tau - t_i] + sqrt(E sum g(., 0)^2 dt) / E[tau - t_i]."""
    n = model.steps
    g0sq = [float(np.max(np.abs(g(model.t(u), 0.0)))) ** 2 for u in range(n + 1)]
    best = 0.0
    for i, kw in stopping_pairs(model, family, levels, ref=X):
        (xt,), span, gacc = stopped_moments(model, [X], i, weights=g0sq, **kw)
        ratio = np.abs(xt - X[i]) / span + np.sqrt(gacc) / span
        best = max(best, float(np.max(ratio)))
    return best


def validate_assumptions(
    model: LatticeModel,
    f: DriftSpec,
    g: DiffusionSpec,
    X: list,
    probes: list,
    *,
    gamma: float | None = None,
    strict: bool = True,
    rtol: float = 1e-9,
    family: str = "grid",
    levels=(),
) -> AssumptionReport:
    """Finite-probe check of monotonicity, slope band, y-Lipschitz and A3 bounds.

    ``X`` is the boundary process (list of path slices).  With ``strict`` the
    first failure raises :class:`AssumptionViolated`; otherwise failures are
    recorded in the report's witnesses.
    """
    if not probes:
        raise ValueError("probe grid is empty")
    witnesses: dict = {}

    def fail(check, witness, msg):
        if strict:
            raise AssumptionViolated(check, witness, msg)
        witnesses.setdefault(check, witness)

    k, K = f.lower_slope, f.upper_slope
    by_ty: dict = {}
    by_tl: dict = {}
    for t, y, l in probes:
        by_ty.setdefault((t, y), set()).add(l)
        by_tl.setdefault((t, l), set()).add(y)

    mono_ok = band_ok = True
    for (t, y), ls in sorted(by_ty.items()):
        ls = sorted(ls)
        vals = [float(f(t, y, l)) for l in ls]
        for (l1, v1), (l2, v2) in zip(zip(ls, vals), zip(ls[1:], vals[1:])):
            if not v1 > v2:
                mono_ok = False
                fail("monotonicity", ((t, y, l1), (t, y, l2)), f"f not strictly decreasing in l near t={t}, y={y}")
        for (l1, v1), (l2, v2) in itertools.combinations(zip(ls, vals), 2):
            gap = abs(l1 - l2)
            slope = abs(v1 - v2)
            if slope < k * gap * (1 - rtol) or slope > K * gap * (1 + rtol):
                band_ok = False
                fail(
                    "slope_band",
                    ((t, y, l1), (t, y, l2)),
                    f"|f(l)-f(l')|/|l-l'| = {slope / gap:.6g} outside [k, K] = [{k}, {K}]",
                )

    lip_ok = True
    for (t, l), ys in sorted(by_tl.items()):
        for y1, y2 in itertools.combinations(sorted(ys), 2):
            gap = abs(y1 - y2)
            df = abs(float(f(t, y1, l)) - float(f(t, y2, l)))
            dg = abs(float(g(t, y1)) - float(g(t, y2)))
            if df > f.lipschitz_y * gap * (1 + rtol) + 1e-15:
                lip_ok = False
                fail("lipschitz_f", ((t, y1, l), (t, y2, l)), f"f exceeds lipschitz_y={f.lipschitz_y}")
            if dg > g.lipschitz_y * gap * (1 + rtol) + 1e-15:
                lip_ok = False
                fail("lipschitz_g", ((t, y1, l), (t, y2, l)), f"g exceeds lipschitz_y={g.lipschitz_y}")

    bounded = all(np.all(np.isfinite(x)) for x in X)
    if not bounded:
        fail("boundary_bound", "non-finite boundary value", "boundary X has non-finite values")

    ratio = gamma_ratio(model, X, g, family, levels)
    f00 = max(abs(float(f(model.t(i), 0.0, 0.0))) for i in range(model.steps + 1))
    gamma_hat = max(ratio, f00)
    if gamma is not None:
        if gamma_hat > gamma * (1 + rtol):
            fail("gamma", gamma_hat, f"estimated Gamma {gamma_hat:.6g} exceeds declared {gamma}")
        gamma_hat = gamma
    label = "deterministic grid pairs" if family == "grid" else "grid pairs and first hitting times"
    return AssumptionReport(gamma_hat, ratio, f00, mono_ok, band_ok, lip_ok, bounded, witnesses, label)
