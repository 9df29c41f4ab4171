"""Curvature tensors, auxiliary tensors, Nijenhuis tensors and exterior derivatives.

Curvature components are stored ``R[l, i, j, k]`` for R(d_i, d_j) d_k = R^l_ijk d_l.
The (1,2) auxiliary tensors gamma and delta are stored ``[l, i, j]`` for
gamma(d_i, d_j) = gamma^l_ij d_l.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .connections import ConnectionCoefficients, covariant_derivative, partial_derivative
from .fields import GeneralizedMetric, GeneratorField, StructureField, TensorField

__all__ = [
    "CurvatureField", "AuxTensorSet",
    "curvature_standard", "curvature_mixed", "aux_tensors", "curvature_closed_forms",
    "m_tensor", "v_tensor", "swap_xy", "nijenhuis_classical", "n1_tensor",
    "torsion_combination", "exterior_derivative_F", "d_connection_F",
    "cyclic_sum", "cyclic_sum_array", "skew_symmetry_rhs", "bianchi_rhs",
]

ein = np.einsum


@dataclass(eq=False)
class CurvatureField:
    field: TensorField
    tag: str

    @property
    def components(self) -> np.ndarray:
        return self.field.components


@dataclass(eq=False)
class AuxTensorSet:
    alpha1: TensorField
    alpha2: TensorField
    beta1: TensorField
    gamma1: TensorField
    gamma2: TensorField
    delta1: TensorField
    nabla_pi: TensorField
    nabla_A: TensorField
    M1: Optional[TensorField] = None
    M2: Optional[TensorField] = None
    V: Optional[TensorField] = None
    N: Optional[TensorField] = None
    N1: Optional[TensorField] = None
    dF: Optional[TensorField] = None
    d1F: Optional[TensorField] = None


def _R(chart, comps, tag) -> CurvatureField:
    return CurvatureField(TensorField(chart, (1, 3), comps), tag)


def curvature_standard(L: ConnectionCoefficients, tag: str = "") -> CurvatureField:
    """R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z on coordinate frames."""
    Lc = L.L
    dL = partial_derivative(L.as_field())  # [i, l, j, k] = d_i L^l_jk
    comps = (ein("iljk->lijk", dL) - ein("jlik->lijk", dL)
             + ein("lim,mjk->lijk", Lc, Lc) - ein("ljm,mik->lijk", Lc, Lc))
    return _R(L.chart, comps, tag)


def curvature_mixed(L1: ConnectionCoefficients, L2: ConnectionCoefficients, kind: int) -> CurvatureField:
    """Curvature tensors of kinds 3, 4, 5 built from a connection pair.

    Nested derivatives expand as nabla^a_i (nabla^b_j d_k) = (d_i Lb^l_jk + Lb^m_jk La^l_im) d_l
    and nabla^a_{nabla^b_j d_i} d_k = Lb^m_ji La^l_mk d_l.
    """
    A, B = L1.L, L2.L
    dA = partial_derivative(L1.as_field())  # [i, l, j, k]
    dB = partial_derivative(L2.as_field())

    def nested(outer, d_inner, inner):
        # (nabla^outer_{d_i} nabla^inner_{d_j} d_k)^l  ->  [l, i, j, k]
        return ein("iljk->lijk", d_inner) + ein("mjk,lim->lijk", inner, outer)

    def nested_swapped(outer, d_inner, inner):
        # (nabla^outer_{d_j} nabla^inner_{d_i} d_k)^l  ->  [l, i, j, k]
        return ein("jlik->lijk", d_inner) + ein("mik,ljm->lijk", inner, outer)

    def along(outer, inner, swap):
        # nabla^outer_{nabla^inner_{d_j} d_i} d_k (swap) or nabla^outer_{nabla^inner_{d_i} d_j} d_k
        spec = "mji,lmk->lijk" if swap else "mij,lmk->lijk"
        return ein(spec, inner, outer)

    if kind == 3:
        comps = (nested(B, dA, A) - nested_swapped(A, dB, B)
                 + along(B, A, swap=True) - along(A, B, swap=False))
    elif kind == 4:
        comps = (nested(B, dA, A) - nested_swapped(A, dB, B)
                 + along(B, B, swap=True) - along(A, A, swap=False))
    elif kind == 5:
        comps = (nested(A, dA, A) - nested_swapped(B, dA, A)
                 + nested(B, dB, B) - nested_swapped(A, dB, B)) * 0.5
    else:
        raise ValueError("kind must be 3, 4 or 5")
    return _R(L1.chart, comps, str(kind))


def aux_tensors(gen: GeneratorField, A: StructureField, m: GeneralizedMetric,
                lc: ConnectionCoefficients) -> AuxTensorSet:
    """alpha1, alpha2, beta1, gamma1, gamma2, delta1 from Levi-Civita derivatives of pi and A."""
    pi = gen.pi.components
    Ac = A.A.components
    A2 = A.A2.components
    piA = ein("k,ki->i", pi, Ac)
    npi = covariant_derivative(lc, gen.pi)
    nA = covariant_derivative(lc, A.A)
    n_pi, n_A = npi.components, nA.components
    quad = (ein("i,j->ij", pi, piA) - ein("i,j->ij", piA, pi)) * 0.5
    lin = ein("j,ki->kij", pi, A2) * 0.5
    chart = m.chart
    return AuxTensorSet(
        alpha1=TensorField(chart, (0, 2), n_pi + quad),
        alpha2=TensorField(chart, (0, 2), n_pi - quad),
        beta1=TensorField(chart, (0, 2), n_pi - ein("ji->ij", n_pi)),
        gamma1=TensorField(chart, (1, 2), n_A - lin),
        gamma2=TensorField(chart, (1, 2), n_A + lin),
        delta1=TensorField(chart, (1, 2), n_A - ein("kji->kij", n_A)),
        nabla_pi=npi,
        nabla_A=nA,
    )


class _Terms:
    """Building blocks of the closed-form curvature displays, all indexed [l, i, j, k]."""

    def __init__(self, gen, A, aux):
        self.pi = gen.pi.components
        self.A = A.A.components
        self.A2 = A.A2.components
        self.piA = ein("k,ki->i", self.pi, self.A)
        self.aux = aux

    # alpha-type (0,2) tensor contracted with A
    def a_XZ_AY(self, a):
        return ein("ik,lj->lijk", a, self.A)

    def a_YZ_AX(self, a):
        return ein("jk,li->lijk", a, self.A)

    def a_XY_AZ(self, a):
        return ein("ij,lk->lijk", a, self.A)

    def a_YX_AZ(self, a):
        return ein("ji,lk->lijk", a, self.A)

    # gamma-type (1,2) tensor times pi
    def g_XZ_pY(self, c):
        return ein("lik,j->lijk", c, self.pi)

    def g_YZ_pX(self, c):
        return ein("ljk,i->lijk", c, self.pi)

    def g_XY_pZ(self, c):
        return ein("lij,k->lijk", c, self.pi)

    def g_YX_pZ(self, c):
        return ein("lji,k->lijk", c, self.pi)


def r5_correction(t: _Terms) -> np.ndarray:
    """Symmetric-in-(X, Y) part added to Rg in the closed form of R5."""
    pi, piA, A, A2 = t.pi, t.piA, t.A, t.A2
    term = (ein("i,j,lk->lijk", pi, pi, A2) - ein("i,k,lj->lijk", pi, piA, A)
            + ein("j,i,lk->lijk", pi, pi, A2) - ein("j,k,li->lijk", pi, piA, A)
            - ein("k,i,lj->lijk", pi, pi, A2) - ein("k,j,li->lijk", pi, pi, A2)
            + ein("k,i,lj->lijk", pi, piA, A) + ein("k,j,li->lijk", pi, piA, A))
    return term * 0.25


def curvature_closed_forms(gen: GeneratorField, A: StructureField, m: GeneralizedMetric,
                           lc: ConnectionCoefficients, theta: int,
                           Rg: CurvatureField | None = None,
                           aux: AuxTensorSet | None = None) -> CurvatureField:
    """R^theta as Rg plus the alpha/beta/gamma/delta correction terms."""
    if Rg is None:
        Rg = curvature_standard(lc, "g")
    if aux is None:
        aux = aux_tensors(gen, A, m, lc)
    t = _Terms(gen, A, aux)
    a1, a2 = aux.alpha1.components, aux.alpha2.components
    b1 = aux.beta1.components
    c1, c2 = aux.gamma1.components, aux.gamma2.components
    d1 = aux.delta1.components
    base = Rg.components
    if theta == 1:
        corr = (t.a_XZ_AY(a1) - t.a_YZ_AX(a1) - t.a_XY_AZ(b1)
                - t.g_XZ_pY(c1) + t.g_YZ_pX(c1) + t.g_XY_pZ(d1)) * 0.5
    elif theta == 2:
        corr = (-t.a_XZ_AY(a2) + t.a_YZ_AX(a2) + t.a_XY_AZ(b1)
                + t.g_XZ_pY(c2) - t.g_YZ_pX(c2) - t.g_XY_pZ(d1)) * 0.5
    elif theta in (3, 4):
        if theta == 3:
            az = t.a_XY_AZ(a2) + t.a_YX_AZ(a1)
        else:
            az = t.a_XY_AZ(a1) + t.a_YX_AZ(a2)
        corr = (t.a_XZ_AY(a2) + t.a_YZ_AX(a1) - az
                - t.g_XZ_pY(c1) - t.g_YZ_pX(c1)
                + t.g_XY_pZ(d1) + t.g_YX_pZ(c1) * 2.0) * 0.5
        if theta == 4:
            pi, A2 = t.pi, t.A2
            corr = corr - (ein("k,j,li->lijk", pi, pi, A2) - ein("k,i,lj->lijk", pi, pi, A2))
    elif theta == 5:
        corr = r5_correction(t)
    else:
        raise ValueError("theta must be in 1..5")
    return _R(m.chart, base + corr, f"{theta}_closed")


def m_tensor(gen: GeneratorField, A: StructureField, m: GeneralizedMetric,
             lc: ConnectionCoefficients, which: int, aux: AuxTensorSet | None = None) -> TensorField:
    """M(X,Y)Z = alpha(X,Z)AY - gamma(X,Z)pi(Y) - (nabla^g_X pi)(Y)AZ + pi(Z)(nabla^g_X A)Y."""
    if aux is None:
        aux = aux_tensors(gen, A, m, lc)
    if which == 1:
        a, c = aux.alpha1.components, aux.gamma1.components
    elif which == 2:
        a, c = aux.alpha2.components, aux.gamma2.components
    else:
        raise ValueError("which must be 1 or 2")
    t = _Terms(gen, A, aux)
    comps = (t.a_XZ_AY(a) - t.g_XZ_pY(c) - t.a_XY_AZ(aux.nabla_pi.components)
             + t.g_XY_pZ(aux.nabla_A.components))
    return TensorField(m.chart, (1, 3), comps)


def v_tensor(gen: GeneratorField, A: StructureField, m: GeneralizedMetric,
             lc: ConnectionCoefficients, aux: AuxTensorSet | None = None) -> TensorField:
    """V(X,Y)Z = pi(X)(nabla^g_Y A)Z + pi(Z)(nabla^g_X A)Y + (nabla^g_X pi)(Z)AY - (nabla^g_X pi)(Y)AZ."""
    if aux is None:
        aux = aux_tensors(gen, A, m, lc)
    t = _Terms(gen, A, aux)
    npi, nA = aux.nabla_pi.components, aux.nabla_A.components
    comps = (t.g_YZ_pX(nA) + t.g_XY_pZ(nA) + t.a_XZ_AY(npi) - t.a_XY_AZ(npi))
    return TensorField(m.chart, (1, 3), comps)


def swap_xy(T):
    """T(Y, X)Z from T(X, Y)Z for a (1,3) field or component array."""
    if isinstance(T, TensorField):
        return TensorField(T.chart, T.valence, ein("ljik->lijk", T.components))
    if isinstance(T, CurvatureField):
        return swap_xy(T.field)
    return ein("...ljik->...lijk", T)


def skew_symmetry_rhs(gen: GeneratorField, A: StructureField, m: GeneralizedMetric,
                      lc: ConnectionCoefficients, theta: int,
                      aux: AuxTensorSet | None = None) -> TensorField:
    """Closed form of R(X,Y)Z + R(Y,X)Z for the tensor of the given kind."""
    if aux is None:
        aux = aux_tensors(gen, A, m, lc)
    t = _Terms(gen, A, aux)
    n = m.chart.dimension
    if theta in (1, 2):
        comps = TensorField.zeros(m.chart, (1, 3)).components
    elif theta in (3, 4):
        npi, nA = aux.nabla_pi.components, aux.nabla_A.components
        comps = (t.a_YZ_AX(npi) + t.a_XZ_AY(npi) - t.a_XY_AZ(npi) - t.a_YX_AZ(npi)
                 - t.g_YZ_pX(nA) - t.g_XZ_pY(nA) + t.g_XY_pZ(nA) + t.g_YX_pZ(nA))
    elif theta == 5:
        comps = r5_correction(t) * 2.0
    else:
        raise ValueError("theta must be in 1..5")
    assert comps.shape == (n,) * 4
    return TensorField(m.chart, (1, 3), comps)


def bianchi_rhs(gen: GeneratorField, A: StructureField, m: GeneralizedMetric,
                lc: ConnectionCoefficients, theta: int,
                aux: AuxTensorSet | None = None) -> TensorField:
    """Closed form of the cyclic sum over (X, Y, Z) of R(X,Y)Z."""
    if aux is None:
        aux = aux_tensors(gen, A, m, lc)
    t = _Terms(gen, A, aux)
    npi, nA = aux.nabla_pi.components, aux.nabla_A.components
    pA = t.a_XY_AZ(ein("i,j->ij", t.pi, t.piA) - ein("i,j->ij", t.piA, t.pi))
    dA_term = t.g_YZ_pX(nA) - ein("lkj,i->lijk", nA, t.pi)   # pi(X)((nabla_Y A)Z - (nabla_Z A)Y)
    dpi_term = t.a_XY_AZ(npi - ein("ji->ij", npi))
    if theta == 1:
        inner = dA_term - dpi_term - pA * 0.5
    elif theta == 2:
        inner = dpi_term - dA_term - pA * 0.5
    elif theta == 3:
        inner = pA
    elif theta in (4, 5):
        return TensorField.zeros(m.chart, (1, 3))
    else:
        raise ValueError("theta must be in 1..5")
    return cyclic_sum(TensorField(m.chart, (1, 3), inner), (1, 2, 3))


# ---------------------------------------------------------------------------
# Nijenhuis tensors
# ---------------------------------------------------------------------------

def nijenhuis_classical(A: StructureField) -> TensorField:
    """N(X,Y) = [AX,AY] - A[AX,Y] - A[X,AY] + A^2[X,Y] in coordinates, stored [k, i, j]."""
    Ac = A.A.components
    dA = partial_derivative(A.A)  # [m, k, j] = d_m A^k_j
    comps = (ein("mi,mkj->kij", Ac, dA) - ein("mj,mki->kij", Ac, dA)
             - ein("km,imj->kij", Ac, dA) + ein("km,jmi->kij", Ac, dA))
    return TensorField(A.A.chart, (1, 2), comps)


def n1_tensor(L1: ConnectionCoefficients, A: StructureField, nabla1_A: TensorField) -> TensorField:
    """(nabla_{AX} A)Y - (nabla_{AY} A)X - A(nabla_X A)Y + A(nabla_Y A)X."""
    Ac = A.A.components
    nA = nabla1_A.components  # [k, d, j]
    comps = (ein("di,kdj->kij", Ac, nA) - ein("dj,kdi->kij", Ac, nA)
             - ein("km,mij->kij", Ac, nA) + ein("km,mji->kij", Ac, nA))
    return TensorField(L1.chart, (1, 2), comps)


def torsion_combination(T12: TensorField, A: StructureField) -> TensorField:
    """-T(AX,AY) - A^2 T(X,Y) + A T(AX,Y) + A T(X,AY)."""
    T = T12.components
    Ac = A.A.components
    A2 = A.A2.components
    comps = (-ein("kab,ai,bj->kij", T, Ac, Ac) - ein("km,mij->kij", A2, T)
             + ein("km,maj,ai->kij", Ac, T, Ac) + ein("km,mib,bj->kij", Ac, T, Ac))
    return TensorField(T12.chart, (1, 2), comps)


# ---------------------------------------------------------------------------
# Exterior derivatives and cyclic sums
# ---------------------------------------------------------------------------

def _cyclic_specs(rank: int, slots, batch: bool):
    a, b, c = slots
    if len({a, b, c}) != 3 or not all(0 <= s < rank for s in slots):
        raise ValueError("cyclic sum needs three distinct slots")
    letters = "abcdefghijklmnopqrstuvw"[:rank]
    out = list(letters)
    first = list(out)
    first[a], first[b], first[c] = out[b], out[c], out[a]
    second = list(out)
    second[a], second[b], second[c] = out[c], out[a], out[b]
    pre = "..." if batch else ""
    dst = pre + "".join(out)
    return (f"{pre}{''.join(first)}->{dst}", f"{pre}{''.join(second)}->{dst}")


def cyclic_sum(T: TensorField, slots=(0, 1, 2)) -> TensorField:
    """Sum of T over the cyclic permutations of the three given slots."""
    r, s = T.valence
    kinds = {slot < r for slot in slots}
    if len(kinds) != 1:
        raise ValueError("cyclic sum slots must all be upper or all lower indices")
    s1, s2 = _cyclic_specs(T.rank, slots, batch=False)
    C = T.components
    return TensorField(T.chart, T.valence, C + ein(s1, C) + ein(s2, C))


def cyclic_sum_array(arr: np.ndarray, slots=(0, 1, 2), batch: bool = False) -> np.ndarray:
    """Cyclic sum on a plain array; with ``batch`` the leading axis is not a slot."""
    rank = arr.ndim - (1 if batch else 0)
    s1, s2 = _cyclic_specs(rank, slots, batch)
    return arr + ein(s1, arr) + ein(s2, arr)


def exterior_derivative_F(F: TensorField) -> TensorField:
    """dF(X,Y,Z) = d_X F(Y,Z) + d_Y F(Z,X) + d_Z F(X,Y)."""
    if F.valence != (0, 2):
        raise ValueError("F must be a (0,2) field")
    dF = TensorField(F.chart, (0, 3), partial_derivative(F))
    return cyclic_sum(dF, (0, 1, 2))


def d_connection_F(L: ConnectionCoefficients, F: TensorField) -> TensorField:
    """Cyclic sum of (nabla_X F)(Y, Z).

    nabla F is antisymmetric in (Y, Z) because F is; that antisymmetry is imposed
    exactly so the result is a true 3-form (identically zero in dimension 2).
    """
    NF = covariant_derivative(L, F).components
    NF = (NF - ein("ikj->ijk", NF)) * 0.5
    return cyclic_sum(TensorField(F.chart, (0, 3), NF), (0, 1, 2))
