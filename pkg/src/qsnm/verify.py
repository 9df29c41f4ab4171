"""Identity registry, check runner and report emission."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .connections import (
    QSFamilyParams, covder_F_display, exterior_F_display, nabla1_A_closed, nabla1_F_closed,
    nabla1_G_closed, nabla1_g_closed, nabla1_pi_closed, nabla2_relations, reconstruct_connection,
    torsion, torsion_closed, torsion_identities,
)
from .curvature import (
    bianchi_rhs, cyclic_sum, skew_symmetry_rhs, swap_xy, torsion_combination,
)
from .expr import DomainError
from .fields import STANDARD_POINTS, STANDARD_SEED, TensorField
from .manifold import QSManifold

__all__ = [
    "DEFAULT_TOL", "DEFAULT_FAMILY", "IdentityCheck", "CheckReport", "SuiteInfo",
    "registry", "get_check", "run_check", "run_suite", "emit_report", "tolerance_error",
]

DEFAULT_TOL = 1e-9
DEFAULT_FAMILY = (QSFamilyParams(1.0, 0.0), QSFamilyParams(0.0, -1.0), QSFamilyParams(2.0, 0.5),
                  QSFamilyParams(0.7, 0.7))

Pair = tuple[str, TensorField, TensorField]


def tolerance_error(lhs: np.ndarray, rhs: np.ndarray) -> tuple[float, float]:
    """(max |lhs - rhs|, max |lhs - rhs| / (1 + max(|lhs|, |rhs|)))."""
    if lhs.size == 0:
        return 0.0, 0.0
    diff = float(np.max(np.abs(lhs - rhs)))
    scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
    return diff, diff / (1.0 + scale)


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    anchor: str
    inputs: tuple[str, ...]
    procedure: Callable[..., list[Pair]]
    kind: str = "equality"   # or "covanishing": exactly two (label, residual, zero) pairs
    description: str = ""


@dataclass
class CheckReport:
    name: str
    anchor: str
    max_abs_err: float
    max_rel_err: float
    points: int
    passed: bool
    status: str = "pass"
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None or not math.isfinite(x) else float(x)
        d = {"name": self.name, "anchor": self.anchor,
             "max_abs_err": num(self.max_abs_err), "max_rel_err": num(self.max_rel_err),
             "points": self.points, "pass": self.passed, "status": self.status}
        if self.detail:
            d["detail"] = self.detail
        return d


@dataclass
class SuiteInfo:
    seed: int
    dimension: int
    spec_hash: str | None
    elapsed_ms: float | None = None

    def to_dict(self) -> dict:
        return {"seed": self.seed, "dimension": self.dimension, "spec_hash": self.spec_hash,
                "elapsed_ms": None if self.elapsed_ms is None else round(self.elapsed_ms, 1)}


# ---------------------------------------------------------------------------
# Procedures
# ---------------------------------------------------------------------------

def _zeros(M: QSManifold, valence) -> TensorField:
    return TensorField.zeros(M.chart, valence)


def _torsion(M, **_):
    return [("T", M.T.T12, M.T_closed.T12)]


def _n1g(M, **_):
    return [("nabla1_g", M.nabla("1", M.metric.g), nabla1_g_closed(M.gen, M.A, M.metric))]


def _n1F(M, **_):
    return [("nabla1_F", M.nabla("1", M.metric.F), nabla1_F_closed(M.gen, M.A, M.metric, M.lc))]


def _n1G(M, **_):
    return [("nabla1_G", M.nabla("1", M.metric.G), nabla1_G_closed(M.gen, M.A, M.metric, M.lc))]


def _n1A(M, **_):
    return [("nabla1_A", M.nabla("1", M.A.A), nabla1_A_closed(M.gen, M.A, M.metric, M.lc))]


def _n1pi(M, **_):
    return [("nabla1_pi", M.nabla("1", M.gen.pi), nabla1_pi_closed(M.gen, M.A, M.metric, M.lc))]


def _n2(M, **_):
    closed = nabla2_relations(M.gen, M.A, M.metric, M.lc)
    fields = (("nabla2_g", M.metric.g), ("nabla2_F", M.metric.F),
              ("nabla2_G", M.metric.G), ("nabla2_A", M.A.A))
    return [(lab, M.nabla("2", f), c) for (lab, f), c in zip(fields, closed)]


def _n0(M, **_):
    return [("L0", M.L0.as_field(), M.lc.as_field())]


def _tid(M, **_):
    return torsion_identities(M.T, M.gen, M.A, M.metric)


def _d1F(M, **_):
    return [("d1F", M.d1F, M.dF)]


def _covderF(M, **_):
    rhs = covder_F_display(M.T, M.nabla("1", M.metric.g), M.nabla("g", M.metric.F), M.A)
    return [("nabla1_F", M.nabla("1", M.metric.F), rhs)]


def _extF(M, **_):
    return [("dF", M.dF, exterior_F_display(M.T, M.nabla("1", M.metric.F), M.A))]


def _N(M, **_):
    return [("N", M.N, M.N1)]


def _tcomb(M, **_):
    return [("combination", torsion_combination(M.T.T12, M.A), _zeros(M, (1, 2)))]


def _R0(M, **_):
    return [("R0", M.R0.field, M.Rg.field)]


def _closed(M, **_):
    return [(f"R{t}", M.R(t).field, M.R_closed(t).field) for t in range(1, 6)]


def _mforms(M, **_):
    Rg = M.Rg.field
    return [("M1", M.R1.field - Rg, (M.M1 - swap_xy(M.M1)) * 0.5),
            ("M2", M.R2.field - Rg, (M.M2 - swap_xy(M.M2)) * -0.5)]


def _skew(M, **_):
    out = []
    for t in range(1, 6):
        R = M.R(t).field
        out.append((f"R{t}", R + swap_xy(R), skew_symmetry_rhs(M.gen, M.A, M.metric, M.lc, t, M.aux)))
    return out


def _r5diff(M, **_):
    R5 = M.R5.field
    return [("R5", R5 - swap_xy(R5), M.Rg.field * 2.0)]


def _bianchi(M, **_):
    return [(f"R{t}", cyclic_sum(M.R(t).field, (1, 2, 3)),
             bianchi_rhs(M.gen, M.A, M.metric, M.lc, t, M.aux)) for t in range(1, 6)]


def _conj(M, **_):
    z = _zeros(M, (1, 3))
    return [("R1-R2", M.R1.field - M.R2.field, z), ("V-Vswap", M.V - swap_xy(M.V), z)]


def _roundtrip(M, **_):
    L = reconstruct_connection(M.T_closed, nabla1_g_closed(M.gen, M.A, M.metric), M.metric, M.lc)
    return [("L1", L.as_field(), M.L1.as_field())]


def _family(M, family: Sequence[QSFamilyParams] = DEFAULT_FAMILY, **_):
    out = []
    for p in family:
        T = torsion(M.family(p), M.metric).T12
        out.append((f"a={p.a:g},b={p.b:g}", T,
                    torsion_closed(M.gen, M.A, M.metric, p.a - p.b).T12))
    return out


_REGISTRY = (
    IdentityCheck("torsion_matches", "whose torsion tensor is given with", ("L1", "pi", "A"), _torsion,
                  description="torsion of L1 equals pi(Y)AX - pi(X)AY"),
    IdentityCheck("nabla1_g_closed", "and which satisfies", ("L1", "g", "F", "pi"), _n1g,
                  description="nabla1 g closed form"),
    IdentityCheck("nabla1_F_closed", "For covariant derivative of skew-symmetric part",
                  ("L1", "Gamma", "F", "A", "pi"), _n1F, description="nabla1 F closed form"),
    IdentityCheck("nabla1_G_closed", "we obtain the covariant derivative of generalized metric",
                  ("L1", "Gamma", "G", "A", "pi"), _n1G, description="nabla1 G closed form"),
    IdentityCheck("nabla1_A_closed", "we obtain the covariant derivative of tensor $A$",
                  ("L1", "Gamma", "A", "pi"), _n1A, description="nabla1 A closed form"),
    IdentityCheck("nabla1_pi_closed", "For covariant derivative of 1-form",
                  ("L1", "Gamma", "A", "pi"), _n1pi, description="nabla1 pi closed form"),
    IdentityCheck("nabla2_relations", "is also non-metric and satisfies",
                  ("L2", "Gamma", "g", "F", "G", "A", "pi"), _n2,
                  description="nabla2 of g, F, G, A"),
    IdentityCheck("nabla0_equals_LC", "coincides with Levi-Civita connection", ("L0", "Gamma"), _n0,
                  description="symmetric part of L1 and L2 is Levi-Civita"),
    IdentityCheck("torsion_identities", "denote the cyclic sum with respect", ("T", "pi", "A", "F"), _tid,
                  description="five cyclic torsion identities"),
    IdentityCheck("d1F_equals_dF", "coincides with that of skew-symmetric part", ("L1", "F"), _d1F,
                  description="cyclic sum of nabla1 F equals dF"),
    IdentityCheck("covder_F_identity", "of the skew symmetric part $F$ of tensor $G$ is given by",
                  ("L1", "Gamma", "T", "F", "A"), _covderF,
                  description="nabla1 F through torsion and nabla1 g"),
    IdentityCheck("exterior_F_identity", "the exterior derivative $\\mathrm{d}F$ of the skew symmetric part",
                  ("L1", "T", "F", "A"), _extF, description="dF through torsion and nabla1 F"),
    IdentityCheck("N_equals_N1", "Nijenhuis tensor $N$ coincides with", ("L1", "A"), _N,
                  description="classical Nijenhuis tensor equals N1"),
    IdentityCheck("torsion_combination_zero", "Since for torsion tensor", ("T", "A"), _tcomb,
                  description="-T(AX,AY) - A^2T(X,Y) + AT(AX,Y) + AT(X,AY) = 0"),
    IdentityCheck("R0_equals_Rg", "coincides with Riemannian curvature tensor", ("L0", "Gamma"), _R0,
                  description="curvature of L0 equals Riemannian curvature"),
    IdentityCheck("curvature_closed_forms", "satisfy the following relations",
                  ("L1", "L2", "Gamma", "A", "pi"), _closed, description="R1..R5 closed forms"),
    IdentityCheck("M_forms", "If we define (1,3) tensor", ("L1", "L2", "Gamma", "A", "pi"), _mforms,
                  description="R1, R2 through M1, M2"),
    IdentityCheck("skew_symmetry", "skew-symmetric properties of curvature tensors",
                  ("L1", "L2", "Gamma", "A", "pi"), _skew, description="R(X,Y)Z + R(Y,X)Z"),
    IdentityCheck("R5_difference", "has the following property", ("L1", "L2", "Gamma"), _r5diff,
                  description="R5(X,Y)Z - R5(Y,X)Z = 2Rg(X,Y)Z"),
    IdentityCheck("bianchi_R4_R5", "we will obtain the first Bianchi identities",
                  ("L1", "L2", "Gamma", "A", "pi"), _bianchi,
                  description="cyclic sums of R1..R5"),
    IdentityCheck("conjugate_symmetry", "is conjugate symmetric connection if and only if",
                  ("L1", "L2", "Gamma", "A", "pi"), _conj, kind="covanishing",
                  description="R1 = R2 iff V is symmetric in X, Y"),
    IdentityCheck("reconstruction_round_trip", "uniquely determined by the following formula",
                  ("Gamma", "g", "A", "pi", "L1"), _roundtrip,
                  description="L1 rebuilt from its torsion and nabla1 g"),
    IdentityCheck("general_family_torsion", "where $a$ and $b$ are different real numbers",
                  ("Gamma", "A", "pi"), _family,
                  description="torsion of the (a, b) family is (a - b)(pi(Y)AX - pi(X)AY)"),
)


def registry() -> list[IdentityCheck]:
    return list(_REGISTRY)


def get_check(name: str) -> IdentityCheck:
    for c in _REGISTRY:
        if c.name == name:
            return c
    raise KeyError(f"no check named {name!r}")


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

def run_check(check: IdentityCheck, M: QSManifold, num_points: int = STANDARD_POINTS,
              seed: int = STANDARD_SEED, tol: float = DEFAULT_TOL, **options) -> CheckReport:
    """Evaluate one check at sampled points and apply its pass rule."""
    ev = M.evaluator(num_points, seed)
    try:
        pairs = check.procedure(M, **options)
        errs = []
        for label, lhs, rhs in pairs:
            errs.append((label, *tolerance_error(lhs.evaluate(ev), rhs.evaluate(ev))))
    except DomainError as exc:
        point = None if exc.point is None else [float(v) for v in exc.point]
        return CheckReport(check.name, check.anchor, math.nan, math.nan, num_points, False,
                           "inconclusive", {"error": str(exc), "point": point})
    max_abs = max(e[1] for e in errs)
    max_rel = max(e[2] for e in errs)
    if check.kind == "covanishing":
        small = [e[2] <= tol for e in errs]
        passed = all(small) or not any(small)
        detail = {"residuals": {e[0]: e[2] for e in errs}}
    else:
        passed = max_rel <= tol
        detail = {}
        if len(errs) > 1 and not passed:
            detail = {"failing": [e[0] for e in errs if e[2] > tol]}
    return CheckReport(check.name, check.anchor, max_abs, max_rel, num_points, passed,
                       "pass" if passed else "fail", detail)


def run_suite(M: QSManifold, num_points: int = STANDARD_POINTS, seed: int = STANDARD_SEED,
              tol: float = DEFAULT_TOL, checks: Sequence[IdentityCheck] | None = None,
              **options) -> list[CheckReport]:
    return [run_check(c, M, num_points, seed, tol, **options)
            for c in (registry() if checks is None else checks)]


def _fmt_err(x: float) -> str:
    return "n/a" if not math.isfinite(x) else f"{x:.3e}"


def emit_report(reports: Sequence[CheckReport], fmt: str = "table", path=None,
                suite: SuiteInfo | None = None) -> str:
    """Render reports as JSON or a fixed-width table; optionally write them to path."""
    if fmt == "json":
        items = [r.to_dict() for r in reports]
        if suite is not None and reports:
            items.append(suite.to_dict())
        text = json.dumps(items, indent=2) + "\n"
    elif fmt == "table":
        header = f"{'#':>2}  {'check':<26} {'result':<12} {'max_abs_err':>11} {'max_rel_err':>11} {'points':>6}"
        lines = [header, "-" * len(header)]
        for k, r in enumerate(reports, 1):
            lines.append(f"{k:>2}  {r.name:<26} {r.status.upper():<12} {_fmt_err(r.max_abs_err):>11} "
                         f"{_fmt_err(r.max_rel_err):>11} {r.points:>6}")
        if reports:
            n_pass = sum(r.passed for r in reports)
            lines.append("-" * len(header))
            tail = f"{n_pass}/{len(reports)} passed"
            if suite is not None:
                tail += f"  dimension={suite.dimension} seed={suite.seed} spec={suite.spec_hash}"
                if suite.elapsed_ms is not None:
                    tail += f" elapsed={suite.elapsed_ms:.0f}ms"
            lines.append(tail)
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
