"""Index process L, value functions V(t, l) and pairwise roots l_{s,tau}.

All computations run on the path lattice.  For a level l the value function
is the optimal-stopping value

    V(t, l) = min over stopping times tau >= t of
              E[X_tau + sum_{t<=u<tau} (f(u, l) dt + g(u+1) dB_u) | t]

and L_t = sup{l : V(t, l) = X_t}.  Because V(t, l) = min(X_t, C(t, l)) with a
continuation value C strictly decreasing in l, L_t is the root of
C(t, l) = X_t and is located by bisection at every state at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import DiffusionSpec, DriftSpec
from .errors import BracketExhausted, RootBracketFailure
from .scene import LatticeModel, expect_step, grow, relative


@dataclass(frozen=True)
class FrozenCoefficients:
    """f and g with the y argument replaced by a fixed process y."""

    model: LatticeModel
    f: DriftSpec
    g: DiffusionSpec
    y: tuple
    gdb: tuple

    @property
    def lower_slope(self) -> float:
        return self.f.lower_slope

    @property
    def upper_slope(self) -> float:
        return self.f.upper_slope

    def drift(self, i: int, l, s: int | None = None) -> np.ndarray:
        """f(t_i, y_i, l); with ``s`` the y slice is taken in the subtree view rooted at time s."""
        y = self.y[i] if s is None else relative(self.y[i], s)
        return np.asarray(self.f(self.model.t(i), y, l), dtype=float)

    def diff(self, i: int) -> np.ndarray:
        return np.asarray(self.g(self.model.t(i), self.y[i]), dtype=float)


def freeze(model: LatticeModel, f: DriftSpec, g: DiffusionSpec, y: list | None = None) -> FrozenCoefficients:
    n = model.steps
    if y is None:
        y = [np.zeros((1, 1)) for _ in range(n + 1)]
    y = tuple(np.asarray(v, dtype=float) for v in y)
    gdb = []
    for i in range(n):
        if g.identically_zero:
            gdb.append(np.zeros((1, 1)))
            continue
        gnext = np.asarray(g(model.t(i + 1), y[i + 1]), dtype=float)
        gnext = np.broadcast_to(gnext, np.broadcast_shapes(gnext.shape, y[i + 1].shape, (1, 1)))
        # right-endpoint integrand times the (already known) step-i B increment
        gdb.append(model.delta_b(i) * expect_step(gnext))
    return FrozenCoefficients(model, f, g, y, tuple(gdb))


@dataclass
class RepresentationResult:
    L: list
    clamped: list
    tol_l: float
    bracket: tuple
    V_probe: dict = field(default_factory=dict)

    @property
    def clamp_count(self) -> int:
        return int(sum(int(np.count_nonzero(c)) for c in self.clamped))


def value_function(model: LatticeModel, coeffs: FrozenCoefficients, X: list, l: float) -> list:
    n = model.steps
    dt = model.dt
    V = [None] * (n + 1)
    V[n] = np.asarray(X[n], dtype=float)
    for j in range(n - 1, -1, -1):
        cont = coeffs.drift(j, l) * dt + coeffs.gdb[j] + expect_step(V[j + 1])
        V[j] = np.minimum(X[j], cont)
    return V


def continuation(coeffs: FrozenCoefficients, X: list, s: int, l) -> np.ndarray:
    """C(s, l) with a separate level l for every time-s state.

    ``l`` is a time-s slice (or broadcastable to one).  Each state's subtree is
    solved with that state's own level by working in the relative view
    ``(W bits after s, W prefix, B)``, where the levels broadcast along axis 0.
    """
    model = coeffs.model
    n = model.steps
    dt = model.dt
    l3 = relative(np.atleast_2d(np.asarray(l, dtype=float)), s)
    v = relative(X[n], s)
    for j in range(n - 1, s - 1, -1):
        cont = coeffs.drift(j, l3, s) * dt + relative(coeffs.gdb[j], s) + expect_step(v)
        if j == s:
            return cont[0]
        v = np.minimum(relative(X[j], s), cont)
    raise ValueError(f"no continuation at terminal time s={s}")


def default_tol(bracket: tuple) -> float:
    return 1e-10 * max(1.0, abs(bracket[0]), abs(bracket[1]))


def index_process(
    model: LatticeModel,
    coeffs: FrozenCoefficients,
    X: list,
    bracket: tuple = (-1.0, 1.0),
    tol_l: float | None = None,
    *,
    cap: float = 2.0**20,
    probe_l: tuple = (),
    strict: bool = False,
) -> RepresentationResult:
    model.require_path_budget()
    n = model.steps
    tol = default_tol(bracket) if tol_l is None else tol_l
    base = max(1.0, abs(bracket[0]), abs(bracket[1]))
    L, clamped = [None] * n, [None] * n
    for s in range(n - 1, -1, -1):
        x_s = np.asarray(X[s], dtype=float)

        def C(l):
            return continuation(coeffs, X, s, l)

        shape = np.broadcast_shapes(x_s.shape, C(np.zeros((1, 1))).shape)
        lo = np.full(shape, float(bracket[0]))
        hi = np.full(shape, float(bracket[1]))

        # widen until V(s, lo) = X_s and V(s, hi) < X_s at every state
        step = base
        while step <= cap * base:
            bad_lo = C(lo) < x_s
            bad_hi = C(hi) >= x_s
            if not (bad_lo.any() or bad_hi.any()):
                break
            lo = np.where(bad_lo, lo - step, lo)
            hi = np.where(bad_hi, hi + step, hi)
            step *= 2
        clamp_lo = C(lo) < x_s
        clamp_hi = C(hi) >= x_s
        clamp = clamp_lo | clamp_hi
        if strict and clamp.any():
            raise BracketExhausted(f"index bracket exhausted at time index {s} on {int(clamp.sum())} states")

        while True:
            mid = 0.5 * (lo + hi)
            active = (hi - lo > tol) & (mid > lo) & (mid < hi) & ~clamp
            if not active.any():
                break
            ok = C(mid) >= x_s
            lo = np.where(active & ok, mid, lo)
            hi = np.where(active & ~ok, mid, hi)
        Ls = 0.5 * (lo + hi)
        Ls = np.where(clamp_lo, lo, Ls)
        Ls = np.where(clamp_hi, hi, Ls)
        L[s] = Ls
        clamped[s] = clamp
    V_probe = {float(l): value_function(model, coeffs, X, float(l)) for l in probe_l}
    return RepresentationResult(L, clamped, tol, tuple(bracket), V_probe)


# pair roots and the brute-force oracle ----------------------------------------

def along_paths(model: LatticeModel, slices: list, s: int, w_prefix: int, b_path: int) -> np.ndarray:
    """Values of a path process on every W continuation of one time-s state.

    Returns shape ``(2**(N-s), N-s+1)``: row = W continuation (bit r is the move
    on step s+r), column = time s..N.
    """
    n = model.steps
    omega = np.arange(2 ** (n - s))
    out = np.empty((omega.size, n - s + 1))
    for u in range(s, n + 1):
        arr = np.asarray(slices[u], dtype=float)
        nw, nb = arr.shape
        wi = w_prefix + ((omega & (2 ** (u - s) - 1)) << s) if nw > 1 else np.zeros_like(omega)
        bi = b_path if nb > 1 else 0
        out[:, u - s] = arr[wi, bi]
    return out


def _path_pieces(model, coeffs, X, s, w_prefix, b_path):
    n = model.steps
    ypath = along_paths(model, coeffs.y, s, w_prefix, b_path)
    xpath = along_paths(model, X, s, w_prefix, b_path)
    times = model.grid.times[s:]
    db = np.array([model.sqrt_dt if (b_path >> u) & 1 else -model.sqrt_dt for u in range(s, n)])
    gpath = np.asarray(coeffs.g(times[None, 1:], ypath[:, 1:]), dtype=float)
    gpath = np.broadcast_to(gpath, ypath[:, 1:].shape)
    return ypath, xpath, times, gpath * db[None, :]


def pair_root(
    model: LatticeModel,
    coeffs: FrozenCoefficients,
    X: list,
    s: int,
    w_prefix: int,
    b_path: int,
    tau,
    tol_l: float = 1e-12,
) -> float:
    """Root l of E[X_s - X_tau | s] = E[sum_{s<=u<tau} f(u, l) dt + g dB | s] at one state.

    ``tau`` is a deterministic time index > s or an integer array of stopping
    times indexed by the W continuations of the state (see :func:`along_paths`).
    """
    n = model.steps
    dt = model.dt
    ypath, xpath, times, gterm = _path_pieces(model, coeffs, X, s, w_prefix, b_path)
    stop = np.broadcast_to(np.asarray(tau), (ypath.shape[0],)) - s
    if np.any(stop < 1) or np.any(stop > n - s):
        raise ValueError("tau must satisfy s < tau <= N on every path")
    rows = np.arange(ypath.shape[0])
    mask = np.arange(n - s)[None, :] < stop[:, None]
    lhs = np.mean(xpath[:, 0] - xpath[rows, stop])
    gsum = np.mean(np.sum(gterm * mask, axis=1))

    def phi(l):
        fv = np.asarray(coeffs.f(times[None, :-1], ypath[:, :-1], l), dtype=float)
        fv = np.broadcast_to(fv, mask.shape)
        return np.mean(np.sum(fv * mask, axis=1)) * dt + gsum - lhs

    span = np.mean(stop) * dt
    r0 = phi(0.0)
    reach = abs(r0) / (coeffs.lower_slope * span) * (1 + 1e-9) + 1e-12
    lo, hi = (0.0, reach) if r0 >= 0 else (-reach, 0.0)
    if phi(lo) < 0 or phi(hi) > 0:
        raise RootBracketFailure(f"no sign change for l in [{lo}, {hi}]; drift violates the slope band")
    while hi - lo > tol_l:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if phi(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _stop_options(depth: int) -> list:
    """Every stopping rule of a subtree of the given depth, as offsets per leaf."""
    if depth == 0:
        return [np.zeros(1, dtype=np.int64)]
    children = _stop_options(depth - 1)
    out = [np.zeros(2**depth, dtype=np.int64)]
    out.extend(_join(a, b) for a in children for b in children)
    return out


def _join(down: np.ndarray, up: np.ndarray) -> np.ndarray:
    leaves = np.arange(2 * down.size)
    return np.where(leaves & 1, up[leaves >> 1], down[leaves >> 1]) + 1


def enumerate_stopping_times(depth: int) -> np.ndarray:
    """All stopping times tau > s on a W subtree of the given depth (offsets from s).

    Shape ``(count, 2**depth)``; 1, 4, 25, 676 rules for depth 1..4.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if depth > 4:
        raise ValueError("exhaustive stopping-time enumeration is limited to depth <= 4")
    children = _stop_options(depth - 1)
    return np.array([_join(a, b) for a in children for b in children])


def brute_force_index(
    model: LatticeModel, coeffs: FrozenCoefficients, X: list, s: int, tol_l: float = 1e-12
) -> np.ndarray:
    """L_s as the minimum of pair roots over every stopping time tau > s.

    Independent of :func:`index_process`: roots are bracketed from the slope
    band and bisected per stopping time.  Returns a full time-s path slice.
    """
    n = model.steps
    dt = model.dt
    rules = enumerate_stopping_times(n - s)
    n_rules, n_leaf = rules.shape
    k = coeffs.lower_slope
    out = np.empty(model.path_shape(s))
    d_idx = np.arange(n - s)
    mask = (d_idx[None, None, :] < rules[:, :, None]).astype(float)
    span = rules.mean(axis=1) * dt
    for wp in range(2**s):
        for bp in range(2**n):
            ypath, xpath, times, gterm = _path_pieces(model, coeffs, X, s, wp, bp)
            xtau = np.take_along_axis(np.broadcast_to(xpath, (n_rules,) + xpath.shape), rules[:, :, None], axis=2)[..., 0]
            lhs = np.mean(xpath[None, :, 0] - xtau, axis=1)
            gsum = np.mean(np.sum(mask * gterm[None], axis=2), axis=1)

            def phi(l):
                fv = np.asarray(coeffs.f(times[None, None, :-1], ypath[None, :, :-1], l[:, None, None]), dtype=float)
                return np.mean(np.sum(mask * fv, axis=2), axis=1) * dt + gsum - lhs

            r0 = phi(np.zeros(n_rules))
            reach = np.abs(r0) / (k * span) * (1 + 1e-9) + 1e-12
            lo = np.where(r0 >= 0, 0.0, -reach)
            hi = np.where(r0 >= 0, reach, 0.0)
            if np.any(phi(lo) < 0) or np.any(phi(hi) > 0):
                raise RootBracketFailure("slope-band bracket does not contain a root")
            while True:
                mid = 0.5 * (lo + hi)
                active = (hi - lo > tol_l) & (mid > lo) & (mid < hi)
                if not active.any():
                    break
                ok = phi(mid) >= 0
                lo = np.where(active & ok, mid, lo)
                hi = np.where(active & ~ok, mid, hi)
            out[wp, bp] = np.min(0.5 * (lo + hi))
    return out


# reconstruction check ------------------------------------------------------------

@dataclass
class RepresentationCheck:
    max_residual: float
    per_time: list
    excluded: int
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.max_residual <= self.tolerance


def verify_representation(
    model: LatticeModel,
    coeffs: FrozenCoefficients,
    X: list,
    rep: RepresentationResult,
    tol: float | None = None,
) -> RepresentationCheck:
    """Rebuild E[X_T + sum f(u, max_{s<=v<=u} L_v) dt + g dB | s] and compare with X_s."""
    n = model.steps
    dt = model.dt
    if tol is None:
        tol = coeffs.upper_slope * rep.tol_l * model.grid.horizon + 1e-9
    per_time, excluded = [], 0
    for s in range(n):
        running = [None] * n
        running[s] = rep.L[s]
        for u in range(s + 1, n):
            running[u] = np.maximum(grow(running[u - 1]), rep.L[u])
        R = np.asarray(X[n], dtype=float)
        for u in range(n - 1, s - 1, -1):
            R = expect_step(R) + coeffs.drift(u, running[u]) * dt + coeffs.gdb[u]
        resid = np.abs(R - X[s])
        resid = np.broadcast_to(resid, np.broadcast_shapes(resid.shape, rep.clamped[s].shape))
        keep = ~np.broadcast_to(rep.clamped[s], resid.shape)
        excluded += int(np.count_nonzero(~keep))
        per_time.append(float(np.max(resid[keep])) if keep.any() else 0.0)
    return RepresentationCheck(max(per_time), per_time, excluded, tol)
