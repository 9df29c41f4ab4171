"""Manifold spec files, seeded random manifolds and the cached field bundle."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Callable

import numpy as np

from .connections import (
    CANONICAL, ConnectionCoefficients, QSFamilyParams, TorsionField, christoffel,
    covariant_derivative, dual_connection, qs_connection, symmetric_part_connection,
    torsion, torsion_closed,
)
from .curvature import (
    AuxTensorSet, aux_tensors, curvature_closed_forms, curvature_mixed, curvature_standard,
    d_connection_F, exterior_derivative_F, m_tensor, n1_tensor, nijenhuis_classical, v_tensor,
)
from .expr import Evaluator, ExprSyntaxError
from .fields import (
    Chart, DegeneracyError, GeneralizedMetric, GeneratorField, StructureField, TensorField,
    compute_A, compute_P, split_metric,
)

__all__ = [
    "ManifoldSpec", "ManifoldSpecError", "GenerationError", "RandomManifoldConfig",
    "SplitMix64", "random_manifold", "load_manifold", "manifold_from_spec", "QSManifold",
    "TENSOR_NAMES", "E1_SPEC",
]


class ManifoldSpecError(ValueError):
    pass


class GenerationError(RuntimeError):
    pass


@dataclass
class ManifoldSpec:
    dimension: int
    coordinates: list[str]
    G: list[list[str]]
    pi: list[str]
    box: list[list[float]] | None = None
    note: str | None = None

    def to_dict(self) -> dict:
        d = {"dimension": self.dimension, "coordinates": list(self.coordinates),
             "G": [list(row) for row in self.G], "pi": list(self.pi)}
        if self.box is not None:
            d["box"] = [list(b) for b in self.box]
        if self.note is not None:
            d["note"] = self.note
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @property
    def spec_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "ManifoldSpec":
        if not isinstance(d, dict):
            raise ManifoldSpecError("manifold spec must be a JSON object")
        for key in ("dimension", "coordinates", "G", "pi"):
            if key not in d:
                raise ManifoldSpecError(f"manifold spec is missing {key!r}")
        n = d["dimension"]
        if not isinstance(n, int) or n < 2:
            raise ManifoldSpecError("dimension must be an integer >= 2")
        coords = d["coordinates"]
        if not isinstance(coords, list) or len(coords) != n:
            raise ManifoldSpecError(f"coordinates must list {n} names")
        G = d["G"]
        if not isinstance(G, list) or len(G) != n or any(
                not isinstance(row, list) or len(row) != n for row in G):
            raise ManifoldSpecError(f"G must be a {n}x{n} array of expression strings")
        pi = d["pi"]
        if not isinstance(pi, list) or len(pi) != n:
            raise ManifoldSpecError(f"pi must list {n} expression strings")
        box = d.get("box")
        if box is not None and (not isinstance(box, list) or len(box) != n
                                or any(not isinstance(b, list) or len(b) != 2 for b in box)):
            raise ManifoldSpecError(f"box must be a list of {n} [lo, hi] pairs")
        return cls(n, [str(c) for c in coords], [[str(x) for x in row] for row in G],
                   [str(x) for x in pi], box, d.get("note"))

    @classmethod
    def from_json(cls, text: str) -> "ManifoldSpec":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ManifoldSpecError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
        return cls.from_dict(d)


E1_SPEC = ManifoldSpec(2, ["x", "y"], [["1", "1"], ["-1", "1"]], ["1", "0"],
                       note="constant example: g = identity, F12 = 1, pi = dx")


def manifold_from_spec(spec: ManifoldSpec):
    """Build (metric, generator, structure, chart), validating non-degeneracy."""
    try:
        chart = Chart(spec.dimension, tuple(spec.coordinates),
                      None if spec.box is None else tuple(tuple(b) for b in spec.box))
    except ValueError as exc:
        raise ManifoldSpecError(str(exc)) from exc

    def parse_all(strings, where):
        out = []
        for idx, s in np.ndenumerate(np.array(strings, dtype=object)):
            try:
                out.append(chart.parse(s))
            except ExprSyntaxError as exc:
                raise ManifoldSpecError(f"{where}{list(idx)}: {exc}") from exc
        return np.array(out, dtype=object).reshape(np.shape(strings))

    G = TensorField(chart, (0, 2), parse_all(spec.G, "G"))
    pi = TensorField(chart, (0, 1), parse_all(spec.pi, "pi"))
    m = split_metric(G)
    return m, compute_P(m, pi), compute_A(m), chart


def load_manifold(path):
    text = Path(path).read_text(encoding="utf-8")
    return manifold_from_spec(ManifoldSpec.from_json(text))


# ---------------------------------------------------------------------------
# Random manifolds
# ---------------------------------------------------------------------------

class SplitMix64:
    """SplitMix64 generator; 53-bit mantissa floats, so output is platform independent."""

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def uniform(self, lo: float = -1.0, hi: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return lo + (hi - lo) * u

    def randrange(self, n: int) -> int:
        return self.next_u64() % n


@dataclass(frozen=True)
class RandomManifoldConfig:
    seed: int = 0
    dimension: int = 3
    eps: float = 0.1
    degree: int = 2
    trig: bool = True
    skew_amplitude: float | None = None
    pi_amplitude: float = 1.0

    def __post_init__(self):
        if not 2 <= self.dimension <= 4:
            raise ValueError("random manifolds are generated for dimensions 2-4")
        if not 0 <= self.eps < 0.5:
            raise ValueError("eps must lie in [0, 0.5)")
        if self.degree < 0:
            raise ValueError("degree must be non-negative")

    @property
    def skew(self) -> float:
        return self.eps if self.skew_amplitude is None else self.skew_amplitude


def _fmt(c: float) -> str:
    return f"{c:.6f}"


def _poly(rng: SplitMix64, names, degree: int, scale: float, trig: bool, constant: float = 0.0) -> str:
    """Random polynomial with |value| <= scale on [-1, 1]^n (plus an optional constant)."""
    n = len(names)
    monomials = [mon for d in range(degree + 1)
                 for mon in combinations_with_replacement(range(n), d)]
    count = len(monomials) + (1 if trig else 0)
    terms = []
    for mon in monomials:
        c = rng.uniform() * scale / count
        if not mon:
            c += constant
        factor = "*".join(names[i] for i in mon)
        terms.append((c, factor))
    if trig:
        c = rng.uniform() * scale / count
        a = rng.randrange(n)
        b = rng.randrange(n)
        fn = "sin" if rng.randrange(2) else "cos"
        terms.append((c, f"{fn}({names[a]}*{names[b]} + {_fmt(rng.uniform())})"))
    out = []
    for k, (c, factor) in enumerate(terms):
        txt = _fmt(abs(c))
        if factor:
            txt += "*" + factor
        if k == 0:
            out.append(("-" if c < 0 else "") + txt)
        else:
            out.append(("- " if c < 0 else "+ ") + txt)
    return " ".join(out)


def random_manifold(cfg: RandomManifoldConfig, max_attempts: int = 10) -> ManifoldSpec:
    """Seeded random (G, pi): g = I + eps*S and F = skew*K with |S_ij|, |K_ij| <= 1 on the unit box."""
    n = cfg.dimension
    names = [f"x{i + 1}" for i in range(n)]
    rng = SplitMix64(cfg.seed)
    last = None
    for attempt in range(max_attempts):
        g = [[None] * n for _ in range(n)]
        f = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                g[i][j] = g[j][i] = _poly(rng, names, cfg.degree, cfg.eps, cfg.trig,
                                          1.0 if i == j else 0.0)
            for j in range(i + 1, n):
                f[i][j] = _poly(rng, names, cfg.degree, cfg.skew, cfg.trig)
        G = [[None] * n for _ in range(n)]
        for i in range(n):
            G[i][i] = g[i][i]
            for j in range(i + 1, n):
                G[i][j] = f"({g[i][j]}) + ({f[i][j]})"
                G[j][i] = f"({g[i][j]}) - ({f[i][j]})"
        pi = [_poly(rng, names, cfg.degree, cfg.pi_amplitude, cfg.trig) for _ in range(n)]
        note = (f"random seed={cfg.seed} eps={cfg.eps} degree={cfg.degree} "
                f"trig={cfg.trig} attempt={attempt}")
        spec = ManifoldSpec(n, names, G, pi, None, note)
        try:
            manifold_from_spec(spec)
        except DegeneracyError as exc:
            last = exc
            continue
        return spec
    raise GenerationError(f"no non-degenerate manifold after {max_attempts} attempts: {last}")


# ---------------------------------------------------------------------------
# Field bundle
# ---------------------------------------------------------------------------

class QSManifold:
    """Every derived object of one generalized Riemannian manifold, built lazily once.

    ``connection`` overrides the canonical quarter-symmetric connection; all
    operator-side quantities (torsion, nabla, curvature) then follow it while
    closed forms keep using g, F, A and pi.  This is how faults are injected.
    """

    def __init__(self, metric: GeneralizedMetric, gen: GeneratorField, A: StructureField,
                 chart: Chart, spec: ManifoldSpec | None = None,
                 connection: ConnectionCoefficients | None = None):
        self.metric = metric
        self.gen = gen
        self.A = A
        self.chart = chart
        self.spec = spec
        self._override = connection
        self._evaluators: dict[tuple[int, int], Evaluator] = {}

    @classmethod
    def from_spec(cls, spec: ManifoldSpec) -> "QSManifold":
        m, gen, A, chart = manifold_from_spec(spec)
        return cls(m, gen, A, chart, spec)

    @classmethod
    def load(cls, path) -> "QSManifold":
        return cls.from_spec(ManifoldSpec.from_json(Path(path).read_text(encoding="utf-8")))

    def with_connection(self, L1: ConnectionCoefficients) -> "QSManifold":
        return QSManifold(self.metric, self.gen, self.A, self.chart, self.spec, L1)

    @property
    def dimension(self) -> int:
        return self.chart.dimension

    def evaluator(self, num_points: int, seed: int) -> Evaluator:
        key = (num_points, seed)
        if key not in self._evaluators:
            self._evaluators[key] = Evaluator(self.chart.sample_points(num_points, seed))
        return self._evaluators[key]

    # connections
    @cached_property
    def lc(self) -> ConnectionCoefficients:
        return christoffel(self.metric)

    @cached_property
    def L1(self) -> ConnectionCoefficients:
        if self._override is not None:
            return self._override
        return qs_connection(self.lc, self.gen, self.A, CANONICAL)

    def family(self, params: QSFamilyParams) -> ConnectionCoefficients:
        return qs_connection(self.lc, self.gen, self.A, params)

    @cached_property
    def L2(self) -> ConnectionCoefficients:
        return dual_connection(self.L1)

    @cached_property
    def L0(self) -> ConnectionCoefficients:
        return symmetric_part_connection(self.L1, self.L2)

    @cached_property
    def T(self) -> TorsionField:
        return torsion(self.L1, self.metric)

    @cached_property
    def T_closed(self) -> TorsionField:
        return torsion_closed(self.gen, self.A, self.metric)

    # covariant derivatives through the engine
    def nabla(self, which: str, f: TensorField) -> TensorField:
        """Covariant derivative of f along "g", "0", "1" or "2"; cached per (connection, field)."""
        L = {"g": self.lc, "1": self.L1, "2": self.L2, "0": self.L0}[which]
        cache = self.__dict__.setdefault("_nabla_cache", {})
        key = (which, id(f))
        if key not in cache:
            # keep f alive so its id stays unique
            cache[key] = (covariant_derivative(L, f), f)
        return cache[key][0]

    # curvature
    @cached_property
    def Rg(self):
        return curvature_standard(self.lc, "g")

    @cached_property
    def R0(self):
        return curvature_standard(self.L0, "0")

    @cached_property
    def R1(self):
        return curvature_standard(self.L1, "1")

    @cached_property
    def R2(self):
        return curvature_standard(self.L2, "2")

    @cached_property
    def R3(self):
        return curvature_mixed(self.L1, self.L2, 3)

    @cached_property
    def R4(self):
        return curvature_mixed(self.L1, self.L2, 4)

    @cached_property
    def R5(self):
        return curvature_mixed(self.L1, self.L2, 5)

    def R(self, theta: int):
        return getattr(self, f"R{theta}")

    def R_closed(self, theta: int):
        cache = self.__dict__.setdefault("_rclosed", {})
        if theta not in cache:
            cache[theta] = curvature_closed_forms(self.gen, self.A, self.metric, self.lc,
                                                  theta, self.Rg, self.aux)
        return cache[theta]

    @cached_property
    def aux(self) -> AuxTensorSet:
        return aux_tensors(self.gen, self.A, self.metric, self.lc)

    @cached_property
    def M1(self) -> TensorField:
        return m_tensor(self.gen, self.A, self.metric, self.lc, 1, self.aux)

    @cached_property
    def M2(self) -> TensorField:
        return m_tensor(self.gen, self.A, self.metric, self.lc, 2, self.aux)

    @cached_property
    def V(self) -> TensorField:
        return v_tensor(self.gen, self.A, self.metric, self.lc, self.aux)

    @cached_property
    def N(self) -> TensorField:
        return nijenhuis_classical(self.A)

    @cached_property
    def N1(self) -> TensorField:
        return n1_tensor(self.L1, self.A, self.nabla("1", self.A.A))

    @cached_property
    def dF(self) -> TensorField:
        return exterior_derivative_F(self.metric.F)

    @cached_property
    def d1F(self) -> TensorField:
        return d_connection_F(self.L1, self.metric.F)

    def tensor(self, name: str) -> TensorField:
        try:
            getter = TENSOR_NAMES[name]
        except KeyError:
            raise KeyError(f"unknown tensor {name!r}; choose from {', '.join(TENSOR_NAMES)}") from None
        return getter(self)


def _curv(theta):
    return lambda M: M.R(theta).field


TENSOR_NAMES: dict[str, Callable[[QSManifold], TensorField]] = {
    "g": lambda M: M.metric.g,
    "F": lambda M: M.metric.F,
    "G": lambda M: M.metric.G,
    "A": lambda M: M.A.A,
    "pi": lambda M: M.gen.pi,
    "P": lambda M: M.gen.P,
    "Gamma": lambda M: M.lc.as_field(),
    "L1": lambda M: M.L1.as_field(),
    "L2": lambda M: M.L2.as_field(),
    "L0": lambda M: M.L0.as_field(),
    "T": lambda M: M.T.T12,
    "R_g": lambda M: M.Rg.field,
    "R0": _curv(0),
    "R1": _curv(1),
    "R2": _curv(2),
    "R3": _curv(3),
    "R4": _curv(4),
    "R5": _curv(5),
    "alpha1": lambda M: M.aux.alpha1,
    "alpha2": lambda M: M.aux.alpha2,
    "beta1": lambda M: M.aux.beta1,
    "gamma1": lambda M: M.aux.gamma1,
    "gamma2": lambda M: M.aux.gamma2,
    "delta1": lambda M: M.aux.delta1,
    "M1": lambda M: M.M1,
    "M2": lambda M: M.M2,
    "V": lambda M: M.V,
    "N": lambda M: M.N,
    "N1": lambda M: M.N1,
    "dF": lambda M: M.dF,
    "d1F": lambda M: M.d1F,
}
