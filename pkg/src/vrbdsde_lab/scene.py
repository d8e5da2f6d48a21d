"""Binomial two-noise lattice.

W (forward noise) and B (backward noise) move by +-sqrt(dt) per step with
probability 1/2, independently.  Two state spaces are used:

Node lattice
    Time-i states are ``(w_state, b_suffix)`` with ``w_state`` the number of W
    up-moves so far and ``b_suffix`` the bits of the B increments on steps
    ``i..N-1`` (bit 0 = step i, bit set = up-move).  A node field is exactly a
    random variable measurable w.r.t. ``F_t = F^W_t v F^B_{t,T}`` when the
    dependence on W is Markov.  Node slices have shape ``(i+1, 2**(N-i))``.

Path lattice
    Time-i states are ``(w_path, b_path)``: all W bits up to step i-1 and the
    full B path (bit j = step j).  This is the information ``G_t = F^W_t v F^B_T``
    and is a genuine filtration; running suprema such as ``A_t = max_{s<=t} L_s``
    live here.  Path slices have shape ``(2**i, 2**N)``, but any axis may be
    collapsed to length 1 when the field does not depend on it, so numpy
    broadcasting carries deterministic or W-only fields cheaply.

Conditional expectation one step back only averages the two W branches: the
step-i B increment is already known at time i in both state spaces.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooLarge, IndexMismatch, UnsupportedDimension

MAX_STEPS = 12
NODE_BUDGET = 2**12 * 13 * 13
PATH_BUDGET = 2**23


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int
    max_steps: int = MAX_STEPS

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def t(self, i: int) -> float:
        return i * self.dt


@dataclass(frozen=True)
class NodeIndex:
    time_index: int
    w_state: int
    b_suffix: int


@dataclass(frozen=True)
class AdaptedField:
    """One time slice of a node-lattice field, shape ``(i+1, 2**(N-i))``."""

    time_index: int
    values: np.ndarray

    def __getitem__(self, node: NodeIndex) -> float:
        if node.time_index != self.time_index:
            raise IndexMismatch(f"field at time {self.time_index} indexed at {node}")
        return float(self.values[node.w_state, node.b_suffix])


@dataclass(frozen=True)
class LatticeModel:
    grid: TimeGrid
    w_dim: int = 1
    b_dim: int = 1
    node_counts: tuple = field(default=())

    @property
    def steps(self) -> int:
        return self.grid.steps

    @property
    def dt(self) -> float:
        return self.grid.dt

    @property
    def sqrt_dt(self) -> float:
        return float(np.sqrt(self.grid.dt))

    def t(self, i: int) -> float:
        return self.grid.t(i)

    # node lattice --------------------------------------------------------
    def node_shape(self, i: int) -> tuple:
        return (i + 1, 2 ** (self.steps - i))

    def nodes(self, i: int):
        w_count, s_count = self.node_shape(i)
        for w in range(w_count):
            for s in range(s_count):
                yield NodeIndex(i, w, s)

    def w_value(self, node: NodeIndex) -> float:
        return self.sqrt_dt * (2 * node.w_state - node.time_index)

    def db_value(self, node: NodeIndex) -> float:
        """B increment over [t_i, t_{i+1}], read from bit 0 of the suffix."""
        if node.time_index >= self.steps:
            raise IndexMismatch("no B increment after the terminal time")
        return self.sqrt_dt if node.b_suffix & 1 else -self.sqrt_dt

    def node_field(self, i: int, fn) -> AdaptedField:
        """Node slice of a functional of W_{t_i} alone: ``fn(w)`` with w of shape (i+1, 1)."""
        w = self.sqrt_dt * (2 * np.arange(i + 1) - i)
        vals = np.broadcast_to(np.asarray(fn(w[:, None]), dtype=float), self.node_shape(i))
        return AdaptedField(i, np.array(vals))

    # path lattice --------------------------------------------------------
    def path_shape(self, i: int) -> tuple:
        return (2**i, 2**self.steps)

    @property
    def path_state_count(self) -> int:
        n = self.steps
        return 2**n * (2 ** (n + 1) - 1)

    def require_path_budget(self, budget: int = PATH_BUDGET) -> None:
        if self.path_state_count > budget:
            raise GridTooLarge(
                f"path lattice with N={self.steps} has {self.path_state_count} states, "
                f"budget is {budget}; reduce grid.N"
            )

    def w_path_values(self, i: int) -> np.ndarray:
        """W_{t_i} on every W path, shape ``(2**i, 1)``."""
        ups = popcount(np.arange(2**i))
        return (self.sqrt_dt * (2 * ups - i)).astype(float)[:, None]

    def delta_b(self, i: int) -> np.ndarray:
        """B increment on step i for every B path, shape ``(1, 2**N)``."""
        bits = (np.arange(2**self.steps) >> i) & 1
        return np.where(bits == 1, self.sqrt_dt, -self.sqrt_dt)[None, :]

    def delta_w(self, i: int) -> np.ndarray:
        """W increment on step i seen from time i+1, shape ``(2**(i+1), 1)``."""
        up = (np.arange(2 ** (i + 1)) >> i) & 1
        return np.where(up == 1, self.sqrt_dt, -self.sqrt_dt)[:, None]

    def full(self, arr, i: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(arr, dtype=float), self.path_shape(i))

    def lift(self, fld: AdaptedField) -> np.ndarray:
        """Node slice -> path slice (full shape)."""
        i = fld.time_index
        wp = popcount(np.arange(2**i))
        suffix = np.arange(2**self.steps) >> i
        return fld.values[wp[:, None], suffix[None, :]]

    def project(self, arr, i: int) -> tuple[AdaptedField, float]:
        """Path slice -> node slice, plus the largest spread inside a node fibre.

        A zero spread means the path field is measurable w.r.t. the node
        information ``(w_state, b_suffix)``; the returned node values are fibre
        means.
        """
        full = self.full(arr, i)
        wcount, scount = self.node_shape(i)
        key = (popcount(np.arange(2**i))[:, None] * scount + (np.arange(2**self.steps) >> i)[None, :]).ravel()
        vals = full.ravel()
        size = wcount * scount
        hi = np.full(size, -np.inf)
        lo = np.full(size, np.inf)
        np.maximum.at(hi, key, vals)
        np.minimum.at(lo, key, vals)
        total = np.bincount(key, weights=vals, minlength=size)
        count = np.bincount(key, minlength=size)
        mean = (total / count).reshape(wcount, scount)
        return AdaptedField(i, mean), float(np.max(hi - lo))


def popcount(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    out = np.zeros_like(x)
    while np.any(x):
        out += x & 1
        x = x >> 1
    return out


def build_lattice(
    grid: TimeGrid, w_dim: int = 1, b_dim: int = 1, node_budget: int = NODE_BUDGET
) -> LatticeModel:
    n = grid.steps
    if w_dim != 1 or b_dim != 1:
        raise UnsupportedDimension(f"only w_dim = b_dim = 1 is supported, got ({w_dim}, {b_dim})")
    if n > grid.max_steps or 2**n * (n + 1) * (n + 1) > node_budget:
        raise GridTooLarge(
            f"N={n} exceeds the lattice budget (max steps {grid.max_steps}, node budget {node_budget})"
        )
    counts = tuple((i + 1) * 2 ** (n - i) for i in range(n + 1))
    return LatticeModel(grid, w_dim, b_dim, counts)


# node-lattice operators ---------------------------------------------------

def _check_consecutive(next_field: AdaptedField, at: NodeIndex) -> None:
    if next_field.time_index != at.time_index + 1:
        raise IndexMismatch(
            f"expected a field at time {at.time_index + 1}, got time {next_field.time_index}"
        )


def cond_expect(model: LatticeModel, next_field: AdaptedField, at: NodeIndex) -> float:
    _check_consecutive(next_field, at)
    tail = at.b_suffix >> 1
    v = next_field.values
    return 0.5 * (v[at.w_state + 1, tail] + v[at.w_state, tail])


def extract_z(model: LatticeModel, next_y: AdaptedField, at: NodeIndex) -> float:
    _check_consecutive(next_y, at)
    tail = at.b_suffix >> 1
    v = next_y.values
    return (v[at.w_state + 1, tail] - v[at.w_state, tail]) / (2.0 * model.sqrt_dt)


def backward_increment(model: LatticeModel, gval_next: float, at: NodeIndex) -> float:
    return gval_next * model.db_value(at)


def cond_expect_slice(model: LatticeModel, next_field: AdaptedField) -> AdaptedField:
    i = next_field.time_index - 1
    if i < 0:
        raise IndexMismatch("no time before t_0")
    v = next_field.values
    # parent suffix s has tail s >> 1, i.e. each child column serves two parents
    half = 0.5 * (v[1:, :] + v[:-1, :])
    return AdaptedField(i, np.repeat(half, 2, axis=1))


def extract_z_slice(model: LatticeModel, next_y: AdaptedField) -> AdaptedField:
    i = next_y.time_index - 1
    if i < 0:
        raise IndexMismatch("no time before t_0")
    v = next_y.values
    diff = (v[1:, :] - v[:-1, :]) / (2.0 * model.sqrt_dt)
    return AdaptedField(i, np.repeat(diff, 2, axis=1))


# path-lattice operators ---------------------------------------------------

def expect_step(arr: np.ndarray) -> np.ndarray:
    """Average the two W branches of the last step (axis 0).

    Works on time-(i+1) path slices and on the 3-d subtree views produced by
    :func:`relative`: in both the W bit of the last step is the most
    significant bit of axis 0.
    """
    arr = np.asarray(arr, dtype=float)
    if arr.shape[0] == 1:
        return arr
    h = arr.shape[0] // 2
    return 0.5 * (arr[:h] + arr[h:])


def branches(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(up, down) branches of the last W step."""
    arr = np.asarray(arr, dtype=float)
    if arr.shape[0] == 1:
        return arr, arr
    h = arr.shape[0] // 2
    return arr[h:], arr[:h]


def grow(arr: np.ndarray) -> np.ndarray:
    """Carry a time-i path slice to time i+1 (value unchanged on both W branches)."""
    arr = np.asarray(arr, dtype=float)
    if arr.shape[0] == 1:
        return arr
    return np.concatenate([arr, arr], axis=0)


def relative(arr: np.ndarray, s: int) -> np.ndarray:
    """View a time-j path slice (j >= s) as ``(W bits after s, W prefix up to s, B)``."""
    arr = np.asarray(arr, dtype=float)
    nw, nb = arr.shape
    if nw == 1:
        return arr[None, :, :]
    return arr.reshape(nw >> s, 2**s, nb)


def sup_norm(a: list, b: list) -> float:
    return max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) for x, y in zip(a, b))
