"""Linear connections on a coordinate chart.

Coefficients follow nabla_{d_i} d_j = L^k_{ij} d_k and are stored as
``L[k, i, j]``.  Covariant derivatives put the direction index in the first
lower slot: component ``[k..., i, j...]`` of nabla T is (nabla_{d_i} T)^{k...}_{j...}.
All identities are evaluated on coordinate frames, where Lie brackets vanish.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .expr import differentiate
from .fields import (
    Chart, GeneralizedMetric, GeneratorField, StructureField, TensorField, obj_array,
)

__all__ = [
    "ConnectionCoefficients", "QSFamilyParams", "TorsionField", "CANONICAL",
    "christoffel", "qs_connection", "dual_connection", "symmetric_part_connection",
    "torsion", "covariant_derivative", "partial_derivative",
    "torsion_closed", "nabla1_g_closed", "nabla1_F_closed", "nabla1_G_closed",
    "nabla1_A_closed", "nabla1_pi_closed", "nabla2_relations", "reconstruct_connection",
    "covder_F_display", "exterior_F_display", "torsion_identities",
]

PROVENANCES = ("levi_civita", "qs_family", "dual", "symmetric_part", "reconstructed", "custom")

ein = np.einsum


@dataclass(eq=False)
class ConnectionCoefficients:
    chart: Chart
    L: np.ndarray
    provenance: str = "custom"

    def __post_init__(self):
        n = self.chart.dimension
        if self.L.shape != (n, n, n):
            raise ValueError("connection coefficients must have shape (n, n, n)")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def as_field(self) -> TensorField:
        """The coefficient array viewed as a (1,2) array of fields (not a tensor)."""
        return TensorField(self.chart, (1, 2), self.L)

    def perturbed(self, index, amount: float) -> "ConnectionCoefficients":
        L = self.L.copy()
        L[index] = L[index] + amount
        return ConnectionCoefficients(self.chart, L, "custom")


@dataclass(frozen=True)
class QSFamilyParams:
    a: float = 0.5
    b: float = -0.5

    @property
    def torsion_free(self) -> bool:
        return self.a == self.b


CANONICAL = QSFamilyParams(0.5, -0.5)


@dataclass(eq=False)
class TorsionField:
    T12: TensorField
    metric: GeneralizedMetric

    @property
    def T03(self) -> TensorField:
        """T_ijk = g(T(d_i, d_j), d_k)."""
        comps = ein("lij,lk->ijk", self.T12.components, self.metric.g.components)
        return TensorField(self.T12.chart, (0, 3), comps)


def partial_derivative(T: TensorField) -> np.ndarray:
    """Array D[i, ...] = d_i T[...] (direction leading)."""
    n = T.chart.dimension
    out = obj_array((n,) + T.components.shape)
    for idx in np.ndindex(T.components.shape):
        e = T.components[idx]
        for i in range(n):
            out[(i,) + idx] = differentiate(e, i)
    return out


def christoffel(m: GeneralizedMetric) -> ConnectionCoefficients:
    """Levi-Civita coefficients of the symmetric part g."""
    dg = partial_derivative(m.g)  # dg[i, j, l] = d_i g_jl
    # d_i g_jl + d_j g_il - d_l g_ij, indexed [i, j, l]
    low = dg + ein("jil->ijl", dg) - ein("lij->ijl", dg)
    gam = ein("kl,ijl->kij", m.g_inv.components, low) * 0.5
    # exact symmetry in the lower pair
    n = m.chart.dimension
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                gam[k, j, i] = gam[k, i, j]
    return ConnectionCoefficients(m.chart, gam, "levi_civita")


def qs_connection(lc: ConnectionCoefficients, gen: GeneratorField, A: StructureField,
                  params: QSFamilyParams = CANONICAL) -> ConnectionCoefficients:
    """nabla_X Y = nabla^g_X Y + a pi(Y) AX + b pi(X) AY."""
    pi = gen.pi.components
    Ac = A.A.components
    L = lc.L + ein("j,ki->kij", pi, Ac) * params.a + ein("i,kj->kij", pi, Ac) * params.b
    return ConnectionCoefficients(lc.chart, L, "qs_family")


def dual_connection(L: ConnectionCoefficients) -> ConnectionCoefficients:
    """nabla2_X Y = nabla1_Y X + [X, Y]; on coordinate frames a transpose."""
    return ConnectionCoefficients(L.chart, L.L.transpose(0, 2, 1).copy(), "dual")


def symmetric_part_connection(L1: ConnectionCoefficients,
                              L2: ConnectionCoefficients) -> ConnectionCoefficients:
    if L1.chart != L2.chart:
        raise ValueError("connections live on different charts")
    return ConnectionCoefficients(L1.chart, (L1.L + L2.L) * 0.5, "symmetric_part")


def torsion(L: ConnectionCoefficients, m: GeneralizedMetric) -> TorsionField:
    T = L.L - L.L.transpose(0, 2, 1)
    return TorsionField(TensorField(L.chart, (1, 2), T), m)


def torsion_closed(gen: GeneratorField, A: StructureField, m: GeneralizedMetric,
                   factor: float = 1.0) -> TorsionField:
    """factor * (pi(Y) AX - pi(X) AY)."""
    pi = gen.pi.components
    Ac = A.A.components
    T = (ein("j,ki->kij", pi, Ac) - ein("i,kj->kij", pi, Ac)) * factor
    return TorsionField(TensorField(m.chart, (1, 2), T), m)


def covariant_derivative(L: ConnectionCoefficients, T: TensorField) -> TensorField:
    """Covariant derivative; valence (r, s) -> (r, s + 1), direction first lower slot."""
    r, s = T.valence
    rank = r + s
    C = T.components
    D = partial_derivative(T)  # [i, up..., low...]
    # move the direction axis behind the upper indices
    D = np.moveaxis(D, 0, r)
    letters = string.ascii_letters
    idx = list(letters[:rank])
    d, m = "Z", "Y"
    out_sub = "".join(idx[:r]) + d + "".join(idx[r:])
    Lc = L.L
    for a in range(r):
        src = idx.copy()
        src[a] = m
        spec = f"{idx[a]}{d}{m},{''.join(src)}->{out_sub}"
        D = D + ein(spec, Lc, C)
    for b in range(r, rank):
        src = idx.copy()
        src[b] = m
        spec = f"{m}{d}{idx[b]},{''.join(src)}->{out_sub}"
        D = D - ein(spec, Lc, C)
    return TensorField(T.chart, (r, s + 1), D)


# ---------------------------------------------------------------------------
# Closed forms for the canonical connection and its dual
# ---------------------------------------------------------------------------

def _pieces(gen, A, m):
    pi = gen.pi.components
    Ac = A.A.components
    g = m.g.components
    F = m.F.components
    piA = ein("k,ki->i", pi, Ac)           # pi(A d_i)
    gAA = ein("ai,bj,ab->ij", Ac, Ac, g)   # g(A d_i, A d_j)
    return pi, Ac, g, F, piA, gAA


def nabla1_g_closed(gen, A, m, sign: float = 1.0) -> TensorField:
    """(nabla_X g)(Y, Z) = -1/2 (pi(Y) F(X, Z) + pi(Z) F(X, Y))."""
    pi, Ac, g, F, piA, gAA = _pieces(gen, A, m)
    comps = (ein("j,ik->ijk", pi, F) + ein("k,ij->ijk", pi, F)) * (-0.5 * sign)
    return TensorField(m.chart, (0, 3), comps)


def _nabla_g_F(m, lc):
    return covariant_derivative(lc, m.F).components


def nabla1_F_closed(gen, A, m, lc, sign: float = 1.0) -> TensorField:
    """(nabla^g_X F)(Y, Z) + 1/2 (pi(Y) g(AX, AZ) - pi(Z) g(AX, AY))."""
    pi, Ac, g, F, piA, gAA = _pieces(gen, A, m)
    corr = (ein("j,ik->ijk", pi, gAA) - ein("k,ij->ijk", pi, gAA)) * (0.5 * sign)
    return TensorField(m.chart, (0, 3), _nabla_g_F(m, lc) + corr)


def nabla1_G_closed(gen, A, m, lc, sign: float = 1.0) -> TensorField:
    """Covariant derivative of G written as one display (not as a sum of parts)."""
    pi, Ac, g, F, piA, gAA = _pieces(gen, A, m)
    corr = ein("j,ik->ijk", pi, gAA - F) - ein("k,ij->ijk", pi, gAA + F)
    return TensorField(m.chart, (0, 3), _nabla_g_F(m, lc) + corr * (0.5 * sign))


def nabla1_A_closed(gen, A, m, lc, sign: float = 1.0) -> TensorField:
    """(nabla^g_X A)Y + 1/2 (pi(AY) AX - pi(Y) A^2 X), stored [k, i, j]."""
    pi, Ac, g, F, piA, gAA = _pieces(gen, A, m)
    A2 = A.A2.components
    nA = covariant_derivative(lc, A.A).components
    corr = ein("j,ki->kij", piA, Ac) - ein("j,ki->kij", pi, A2)
    return TensorField(m.chart, (1, 2), nA + corr * (0.5 * sign))


def nabla1_pi_closed(gen, A, m, lc, sign: float = 1.0) -> TensorField:
    """(nabla^g_X pi)(Y) + 1/2 pi(X) pi(AY) - 1/2 pi(AX) pi(Y)."""
    pi, Ac, g, F, piA, gAA = _pieces(gen, A, m)
    npi = covariant_derivative(lc, gen.pi).components
    corr = ein("i,j->ij", pi, piA) - ein("i,j->ij", piA, pi)
    return TensorField(m.chart, (0, 2), npi + corr * (0.5 * sign))


def nabla2_relations(gen, A, m, lc) -> tuple[TensorField, TensorField, TensorField, TensorField]:
    """Closed forms of nabla2 g, nabla2 F, nabla2 G, nabla2 A (sign-flipped corrections)."""
    return (
        nabla1_g_closed(gen, A, m, sign=-1.0),
        nabla1_F_closed(gen, A, m, lc, sign=-1.0),
        nabla1_G_closed(gen, A, m, lc, sign=-1.0),
        nabla1_A_closed(gen, A, m, lc, sign=-1.0),
    )


def reconstruct_connection(T: TorsionField, nabla_g: TensorField, m: GeneralizedMetric,
                           lc: ConnectionCoefficients) -> ConnectionCoefficients:
    """Recover a connection from its torsion and the covariant derivative of g.

    g(nabla_X Y, Z) = g(nabla^g_X Y, Z) + 1/2 (T(X,Y,Z) + T(Z,X,Y) - T(Y,Z,X))
                      - 1/2 ((nabla_X g)(Y,Z) + (nabla_Y g)(Z,X) - (nabla_Z g)(Y,X))
    """
    if nabla_g.valence != (0, 3):
        raise ValueError("nabla_g must be a (0,3) field with the direction first")
    T3 = T.T03.components   # [x, y, z]
    Ng = nabla_g.components  # [x, y, z] = (nabla_x g)(y, z)
    H = (T3 + T3.transpose(1, 2, 0) - T3.transpose(2, 0, 1)) * 0.5
    # (nabla_Y g)(Z,X) -> Ng[j,k,i]; (nabla_Z g)(Y,X) -> Ng[k,j,i]
    H = H - (Ng + Ng.transpose(2, 0, 1) - Ng.transpose(2, 1, 0)) * 0.5
    L = lc.L + ein("lk,ijk->lij", m.g_inv.components, H)
    return ConnectionCoefficients(lc.chart, L, "reconstructed")


def covder_F_display(T: TorsionField, nabla_g: TensorField, nabla_g_F: TensorField,
                     A: StructureField) -> TensorField:
    """Covariant derivative of F expressed through torsion and nabla g.

    Right-hand side of the compatibility relation satisfied by any connection
    built by reconstruct_connection; indexed [x, y, z] = (nabla_x F)(y, z).
    """
    T3 = T.T03.components
    Ng = nabla_g.components
    Ac = A.A.components
    out = nabla_g_F.components
    tors = (ein("ijm,mk->ijk", T3, Ac) + ein("kim,mj->ijk", T3, Ac)
            + ein("mk,mij->ijk", Ac, T3) + ein("mk,mji->ijk", Ac, T3)
            + ein("imk,mj->ijk", T3, Ac) + ein("kmi,mj->ijk", T3, Ac))
    metr = (ein("imk,mj->ijk", Ng, Ac) - ein("ijm,mk->ijk", Ng, Ac) - ein("jmi,mk->ijk", Ng, Ac)
            + ein("kmi,mj->ijk", Ng, Ac) + ein("mk,mji->ijk", Ac, Ng) - ein("mj,mki->ijk", Ac, Ng))
    return TensorField(nabla_g.chart, (0, 3), out + (tors + metr) * 0.5)


def exterior_F_display(T: TorsionField, nabla_F: TensorField, A: StructureField) -> TensorField:
    """-T(X,Y,AZ) - T(Y,Z,AX) - T(Z,X,AY) + cyclic sum of (nabla_X F)(Y,Z)."""
    TA = ein("ijm,mk->ijk", T.T03.components, A.A.components)  # T(X, Y, AZ)
    NF = nabla_F.components
    comps = (-(TA + ein("jki->ijk", TA) + ein("kij->ijk", TA))
             + NF + ein("jki->ijk", NF) + ein("kij->ijk", NF))
    return TensorField(nabla_F.chart, (0, 3), comps)


def torsion_identities(T: TorsionField, gen: GeneratorField, A: StructureField,
                       m: GeneralizedMetric) -> list[tuple[str, TensorField, TensorField]]:
    """Cyclic identities of the torsion pi(Y)AX - pi(X)AY as (label, lhs, rhs) triples.

    The middle relation is a double equality and contributes two triples.
    """
    chart = m.chart
    T3 = T.T03.components
    T12 = T.T12.components
    pi = gen.pi.components
    Ac = A.A.components
    F = m.F.components
    piA = ein("k,ki->i", pi, Ac)

    def cyc(arr, first=0):
        # cyclic sum over the three vector slots starting at axis `first`
        slots = (first, first + 1, first + 2)
        letters = "abcdefg"[:arr.ndim]
        out = list(letters)
        s1, s2 = list(out), list(out)
        a, b, c = slots
        s1[a], s1[b], s1[c] = out[b], out[c], out[a]
        s2[a], s2[b], s2[c] = out[c], out[a], out[b]
        dst = "".join(out)
        return arr + ein(f"{''.join(s1)}->{dst}", arr) + ein(f"{''.join(s2)}->{dst}", arr)

    def f03(comps):
        return TensorField(chart, (0, 3), comps)

    def f13(comps):
        return TensorField(chart, (1, 3), comps)

    zero03 = TensorField.zeros(chart, (0, 3))
    out = []
    # sigma T(X,Y,Z) = -2 sigma pi(X) F(Y,Z)
    out.append(("sum_T", f03(cyc(T3)), f03(cyc(ein("i,jk->ijk", pi, F)) * -2.0)))
    # 2 sigma pi(X) F(AY,AZ) = -sigma (T(AX,Y,AZ) + T(X,AY,AZ))
    FAA = ein("aj,bk,ab->jk", Ac, Ac, F)
    lhs = cyc(ein("i,jk->ijk", pi, FAA)) * 2.0
    rhs = -cyc(ein("ai,ajb,bk->ijk", Ac, T3, Ac) + ein("iab,aj,bk->ijk", T3, Ac, Ac))
    out.append(("sum_pi_FAA", f03(lhs), f03(rhs)))
    # sigma T(T(X,Y),Z) = sigma pi(X)(pi(AY)AZ - pi(AZ)AY) = sigma pi(AX) T(Y,Z)
    TT = cyc(ein("lmk,mij->lijk", T12, T12), first=1)
    mid = cyc(ein("i,j,lk->lijk", pi, piA, Ac) - ein("i,k,lj->lijk", pi, piA, Ac), first=1)
    last = cyc(ein("i,ljk->lijk", piA, T12), first=1)
    out.append(("sum_TT_first", f13(TT), f13(mid)))
    out.append(("sum_TT_second", f13(mid), f13(last)))
    # sigma T(X,Y,AZ) = 0
    out.append(("sum_T_XYAZ", f03(cyc(ein("ijm,mk->ijk", T3, Ac))), zero03))
    # sigma T(AX,AY,Z) = 0
    out.append(("sum_T_AXAY", f03(cyc(ein("ai,bj,abk->ijk", Ac, Ac, T3))), zero03))
    return out
