"""Charts, tensor fields and the generalized metric G = g + F.

Index storage convention: upper indices first, then lower indices, each group
in the order written.  The structure tensor is stored as ``A[k, i]`` for
A^k_i and is defined by F_ij = A^k_i g_kj.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Sequence

import numpy as np

from .expr import Evaluator, Expr, ZERO, as_expr, parse

__all__ = [
    "EPS_DEGENERATE", "STANDARD_POINTS", "STANDARD_SEED",
    "Chart", "TensorField", "GeneralizedMetric", "StructureField",
    "GeneratorField", "DegeneracyError",
    "split_metric", "metric_inverse_at", "compute_A", "compute_P",
    "tensor_eval", "evaluate_fields", "symbolic_inverse", "symbolic_det",
    "obj_array", "check_nondegenerate",
]

EPS_DEGENERATE = 1e-8
STANDARD_POINTS = 50
STANDARD_SEED = 0


class DegeneracyError(ValueError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class Chart:
    dimension: int
    coordinate_names: tuple[str, ...]
    box: tuple[tuple[float, float], ...] = None

    def __post_init__(self):
        n = self.dimension
        if n < 2:
            raise ValueError("chart dimension must be at least 2")
        names = tuple(self.coordinate_names)
        if len(names) != n or len(set(names)) != n:
            raise ValueError("need one distinct coordinate name per dimension")
        object.__setattr__(self, "coordinate_names", names)
        box = self.box
        if box is None:
            box = ((-1.0, 1.0),) * n
        box = tuple((float(lo), float(hi)) for lo, hi in box)
        if len(box) != n or any(hi <= lo for lo, hi in box):
            raise ValueError("sample box must have positive extent along every axis")
        object.__setattr__(self, "box", box)

    @classmethod
    def default(cls, dimension: int, box=None) -> "Chart":
        return cls(dimension, tuple(f"x{i + 1}" for i in range(dimension)), box)

    def parse(self, text: str) -> Expr:
        return parse(text, self.dimension, self.coordinate_names)

    def sample_points(self, num: int, seed: int = STANDARD_SEED) -> np.ndarray:
        """Uniform points in the box shrunk by 10% from each face."""
        rng = np.random.default_rng(seed)
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        pad = 0.1 * (hi - lo)
        return rng.uniform(lo + pad, hi - pad, size=(num, self.dimension))

    def standard_points(self) -> np.ndarray:
        return self.sample_points(STANDARD_POINTS, STANDARD_SEED)


def obj_array(shape) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    arr.fill(ZERO)
    return arr


def _as_obj(values) -> np.ndarray:
    arr = np.array(values, dtype=object)
    flat = arr.reshape(-1)
    for k, v in enumerate(flat):
        flat[k] = as_expr(v)
    return arr


class TensorField:
    """Valence-(r, s) field with one expression per component."""

    __slots__ = ("chart", "valence", "components")

    def __init__(self, chart: Chart, valence: tuple[int, int], components):
        comps = components if isinstance(components, np.ndarray) and components.dtype == object \
            else _as_obj(components)
        r, s = valence
        shape = (chart.dimension,) * (r + s)
        if comps.shape != shape:
            raise ValueError(f"expected component array of shape {shape}, got {comps.shape}")
        self.chart = chart
        self.valence = (int(r), int(s))
        self.components = comps

    @classmethod
    def zeros(cls, chart: Chart, valence) -> "TensorField":
        return cls(chart, valence, obj_array((chart.dimension,) * sum(valence)))

    @classmethod
    def from_strings(cls, chart: Chart, valence, strings) -> "TensorField":
        arr = np.array(strings, dtype=object)
        out = obj_array(arr.shape)
        for idx in np.ndindex(arr.shape):
            out[idx] = chart.parse(str(arr[idx]))
        return cls(chart, valence, out)

    @property
    def rank(self) -> int:
        return sum(self.valence)

    def __getitem__(self, idx):
        return self.components[idx]

    def _check(self, other):
        if not isinstance(other, TensorField):
            return NotImplemented
        if other.chart != self.chart or other.valence != self.valence:
            raise ValueError("tensor fields must share chart and valence")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return TensorField(self.chart, self.valence, self.components + other.components)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return TensorField(self.chart, self.valence, self.components - other.components)

    def __neg__(self):
        return TensorField(self.chart, self.valence, -self.components)

    def __mul__(self, scalar):
        if isinstance(scalar, TensorField):
            return NotImplemented
        return TensorField(self.chart, self.valence, self.components * as_expr(scalar))

    __rmul__ = __mul__

    def evaluate(self, points_or_evaluator) -> np.ndarray:
        """Component values with a leading points axis."""
        ev = points_or_evaluator
        if not isinstance(ev, Evaluator):
            ev = Evaluator(ev)
        flat = ev.many(self.components.reshape(-1))
        return flat.reshape((len(ev),) + self.components.shape)

    def __repr__(self):
        r, s = self.valence
        return f"TensorField(({r}, {s}), dimension={self.chart.dimension})"


def evaluate_fields(fields: Sequence[TensorField], points) -> list[np.ndarray]:
    ev = points if isinstance(points, Evaluator) else Evaluator(points)
    return [f.evaluate(ev) for f in fields]


def tensor_eval(T: TensorField, point) -> np.ndarray:
    """Evaluate every component at one point; shape (n,)*(r+s)."""
    p = np.asarray(point, dtype=float)
    if p.shape != (T.chart.dimension,):
        raise ValueError(f"point must have {T.chart.dimension} coordinates")
    ev = Evaluator(p[None, :])
    out = np.empty(T.components.shape)
    for idx in np.ndindex(T.components.shape):
        try:
            out[idx] = ev(T.components[idx])[0]
        except ArithmeticError as exc:
            raise type(exc)(f"component {idx}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Symbolic determinant and inverse (adjugate formula)
# ---------------------------------------------------------------------------

def _minor_dets(M: np.ndarray):
    n = M.shape[0]
    memo = {}

    def det(rows, cols):
        key = (rows, cols)
        if key in memo:
            return memo[key]
        if len(rows) == 1:
            val = M[rows[0], cols[0]]
        else:
            r0, rest = rows[0], rows[1:]
            val = ZERO
            for k, c in enumerate(cols):
                entry = M[r0, c]
                if entry == ZERO:
                    continue
                sub = det(rest, cols[:k] + cols[k + 1:])
                term = entry * sub
                val = val + term if k % 2 == 0 else val - term
        memo[key] = val
        return val

    return det, tuple(range(n))


def symbolic_det(M: np.ndarray) -> Expr:
    det, full = _minor_dets(M)
    return det(full, full)


def symbolic_inverse(M: np.ndarray) -> tuple[np.ndarray, Expr]:
    """Inverse of a square object array via the adjugate; returns (inv, det)."""
    n = M.shape[0]
    det, full = _minor_dets(M)
    d = det(full, full)
    inv = obj_array((n, n))
    for i, j in product(range(n), repeat=2):
        rows = tuple(r for r in full if r != j)
        cols = tuple(c for c in full if c != i)
        cof = det(rows, cols)
        if (i + j) % 2:
            cof = -cof
        inv[i, j] = cof / d
    return inv, d


# ---------------------------------------------------------------------------
# Generalized metric
# ---------------------------------------------------------------------------

def check_nondegenerate(g: TensorField, points=None, eps: float = EPS_DEGENERATE):
    """Raise DegeneracyError at the first point where |det g| <= eps."""
    pts = g.chart.standard_points() if points is None else np.asarray(points, dtype=float)
    vals = g.evaluate(pts)
    dets = np.linalg.det(vals)
    bad = np.flatnonzero(~(np.abs(dets) > eps))
    if bad.size:
        p = tuple(float(v) for v in pts[bad[0]])
        raise DegeneracyError(f"symmetric part g is degenerate at point {p} (det = {dets[bad[0]]:.3g})", p)


@dataclass(eq=False)
class GeneralizedMetric:
    G: TensorField
    g: TensorField
    F: TensorField

    @property
    def chart(self) -> Chart:
        return self.g.chart

    @cached_property
    def _inverse(self):
        return symbolic_inverse(self.g.components)

    @property
    def g_inv(self) -> TensorField:
        """Symbolic inverse metric g^{ij} as a (2,0) field."""
        return TensorField(self.chart, (2, 0), self._inverse[0])

    @property
    def det_g(self) -> Expr:
        return self._inverse[1]


@dataclass(eq=False)
class StructureField:
    A: TensorField

    @cached_property
    def A2(self) -> TensorField:
        """A composed with itself, stored [k, i]."""
        comps = np.einsum("km,mi->ki", self.A.components, self.A.components)
        return TensorField(self.A.chart, (1, 1), comps)


@dataclass(eq=False)
class GeneratorField:
    pi: TensorField
    P: TensorField


def split_metric(G: TensorField, check_points=None) -> GeneralizedMetric:
    """Split G into symmetric g and skew-symmetric F (exactly, as expressions)."""
    if G.valence != (0, 2):
        raise ValueError("G must be a (0,2) tensor field")
    n = G.chart.dimension
    Gc = G.components
    g = obj_array((n, n))
    F = obj_array((n, n))
    for i in range(n):
        g[i, i] = Gc[i, i]
        for j in range(i + 1, n):
            if Gc[i, j] == Gc[j, i]:
                g[i, j] = g[j, i] = Gc[i, j]
                continue
            g[i, j] = g[j, i] = 0.5 * (Gc[i, j] + Gc[j, i])
            F[i, j] = 0.5 * (Gc[i, j] - Gc[j, i])
            F[j, i] = -F[i, j]
    gf = TensorField(G.chart, (0, 2), g)
    check_nondegenerate(gf, check_points)
    return GeneralizedMetric(G, gf, TensorField(G.chart, (0, 2), F))


def metric_inverse_at(g: TensorField, point) -> np.ndarray:
    vals = tensor_eval(g, point)
    d = np.linalg.det(vals)
    if not abs(d) > EPS_DEGENERATE:
        raise DegeneracyError(f"g is degenerate at {tuple(point)}", tuple(point))
    return np.linalg.inv(vals)


def compute_A(m: GeneralizedMetric) -> StructureField:
    """A^k_i = F_ij g^{jk}, built symbolically from the adjugate inverse."""
    comps = np.einsum("ij,jk->ki", m.F.components, m.g_inv.components)
    return StructureField(TensorField(m.chart, (1, 1), comps))


def compute_P(m: GeneralizedMetric, pi: TensorField) -> GeneratorField:
    if pi.valence != (0, 1):
        raise ValueError("pi must be a (0,1) tensor field")
    comps = np.einsum("ij,j->i", m.g_inv.components, pi.components)
    return GeneratorField(pi, TensorField(m.chart, (1, 0), comps))
