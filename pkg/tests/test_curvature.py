from functools import lru_cache
from itertools import product

import numpy as np
import pytest

from conftest import asymmetric_v_spec, fd_partial, random_qs, rel_err, values
from qsnm.connections import ConnectionCoefficients, christoffel, covariant_derivative, nabla1_pi_closed
from qsnm.curvature import (
    bianchi_rhs, curvature_mixed, curvature_standard, cyclic_sum, cyclic_sum_array,
    exterior_derivative_F, n1_tensor, nijenhuis_classical, skew_symmetry_rhs, swap_xy,
    torsion_combination,
)
from qsnm.fields import Chart, StructureField, TensorField, split_metric, tensor_eval
from qsnm.manifold import QSManifold

RANDOM = [(1, 2), (2, 3), (3, 4), (4, 3)]


# ----------------------------------------------------------------------------
# operator oracle: the curvature displays applied to coordinate vector fields
# ----------------------------------------------------------------------------

class OperatorOracle:
    """Numeric nabla_X Y = X^i d_i Y + L(X, Y) with finite differences; brackets of d_i vanish."""

    def __init__(self, *connections):
        self._evals = [lru_cache(maxsize=None)(self._make(c)) for c in connections]
        self.n = connections[0].chart.dimension

    @staticmethod
    def _make(conn):
        def at(p):
            return tensor_eval(conn.as_field(), np.array(p))
        return at

    def L(self, which, p):
        return self._evals[which](tuple(np.round(p, 15)))

    def nabla(self, which, X, Y, p):
        """X, Y are callables p -> vector."""
        x = X(p)
        dY = fd_partial(Y, p, h=1e-4)     # [i, k]
        return x @ dY + np.einsum("kij,i,j->k", self.L(which, p), x, Y(p))

    def basis(self, i):
        e = np.zeros(self.n)
        e[i] = 1.0
        return lambda p: e

    def field(self, fn):
        return fn


def operator_curvature(oracle, kind, p):
    """R[l, i, j, k] from the operator displays with X = d_i, Y = d_j, Z = d_k."""
    n = oracle.n
    out = np.zeros((n,) * 4)
    nb = oracle.nabla
    one, two = 0, 1
    for i, j, k in product(range(n), repeat=3):
        X, Y, Z = oracle.basis(i), oracle.basis(j), oracle.basis(k)

        def d(a, U, V):
            return lambda q: nb(a, U, V, q)

        if kind in ("g", 1, 2):
            a = {"g": 0, 1: 0, 2: 1}[kind] if kind != "g" else 0
            val = nb(a, X, d(a, Y, Z), p) - nb(a, Y, d(a, X, Z), p)
        elif kind == 3:
            val = (nb(two, X, d(one, Y, Z), p) - nb(one, Y, d(two, X, Z), p)
                   + nb(two, d(one, Y, X), Z, p) - nb(one, d(two, X, Y), Z, p))
        elif kind == 4:
            val = (nb(two, X, d(one, Y, Z), p) - nb(one, Y, d(two, X, Z), p)
                   + nb(two, d(two, Y, X), Z, p) - nb(one, d(one, X, Y), Z, p))
        else:
            val = 0.5 * (nb(one, X, d(one, Y, Z), p) - nb(two, Y, d(one, X, Z), p)
                         + nb(two, X, d(two, Y, Z), p) - nb(one, Y, d(two, X, Z), p))
        out[:, i, j, k] = val
    return out


@pytest.fixture(scope="module")
def m2():
    return random_qs(5, 2)


@pytest.mark.parametrize("kind", [1, 2, 3, 4, 5])
def test_curvature_matches_operator_oracle(m2, kind):
    M = m2
    oracle = OperatorOracle(M.L1, M.L2)
    R = M.R(kind).field
    for p in M.chart.sample_points(3, seed=9):
        assert rel_err(tensor_eval(R, p), operator_curvature(oracle, kind, p)) < 1e-6


def test_riemannian_curvature_matches_operator_oracle(m3):
    oracle = OperatorOracle(m3.lc)
    p = m3.chart.sample_points(1, seed=2)[0]
    assert rel_err(tensor_eval(m3.Rg.field, p), operator_curvature(oracle, "g", p)) < 1e-6


# ----------------------------------------------------------------------------
# worked values
# ----------------------------------------------------------------------------

def test_flat_and_polar_curvature_vanish():
    chart = Chart(2, ("u", "v"), ((0.5, 2.5), (-1.0, 1.0)))
    m = split_metric(TensorField.from_strings(chart, (0, 2), [["1", "0"], ["0", "u^2"]]))
    Rg = curvature_standard(christoffel(m), "g")
    assert np.abs(values(Rg, chart.standard_points())).max() <= 1e-12
    zero = ConnectionCoefficients(chart, TensorField.zeros(chart, (1, 2)).components)
    assert np.all(values(curvature_standard(zero), chart.standard_points()) == 0)


def test_e1_curvature_values(e1):
    p = (0.0, 0.0)
    R1 = tensor_eval(e1.R1.field, p)
    assert R1[0, 0, 1, 1] == 0.25
    assert np.count_nonzero(R1) == 2 and R1[0, 1, 0, 1] == -0.25
    np.testing.assert_array_equal(tensor_eval(e1.R_closed(1).field, p), R1)
    np.testing.assert_array_equal(tensor_eval(e1.R2.field, p), R1)
    # kind 5 on E1: recorded value, equal to its closed form
    R5 = tensor_eval(e1.R5.field, p)
    assert R5[0, 0, 1, 1] == -0.25 and R5[0, 1, 0, 1] == -0.25 and R5[0, 1, 1, 0] == 0.5
    np.testing.assert_array_equal(tensor_eval(e1.R_closed(5).field, p), R5)
    # R5(d1,d2)d2 - R5(d2,d1)d2 = 2Rg = 0
    assert R5[0, 0, 1, 1] - R5[0, 1, 0, 1] == 0
    R4 = e1.R4.field
    assert np.all(tensor_eval(cyclic_sum(R4, (1, 2, 3)), p) == 0)


def test_e1_aux_values(e1):
    p = (0.0, 0.0)
    a1 = tensor_eval(e1.aux.alpha1, p)
    assert a1[0, 1] == -0.5 and a1[1, 0] == 0.5
    g1 = tensor_eval(e1.aux.gamma1, p)   # gamma1(X, Z) = 1/2 pi(Z) X on E1
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0] = expected[1, 1, 0] = 0.5
    np.testing.assert_array_equal(g1, expected)
    assert np.all(tensor_eval(e1.aux.beta1, p) == 0)
    assert np.all(tensor_eval(e1.aux.delta1, p) == 0)
    M1 = tensor_eval(e1.M1, p)
    np.testing.assert_array_equal(M1[:, 0, 1, 1], [0.5, 0])
    np.testing.assert_array_equal(M1[:, 1, 0, 1], [0, 0])
    assert np.all(tensor_eval(e1.V, p) == 0)


def test_collapsing_pair_gives_standard_curvature(m3):
    pts = m3.chart.standard_points()
    L = m3.lc
    R = values(curvature_standard(L), pts)
    for kind in (3, 4, 5):
        assert rel_err(values(curvature_mixed(L, L, kind), pts), R) <= 1e-12


def test_zero_generator_makes_every_tensor_riemannian():
    spec = asymmetric_v_spec()
    spec.pi = ["0", "0", "0"]
    M = QSManifold.from_spec(spec)
    pts = M.chart.standard_points()
    Rg = values(M.Rg, pts)
    for t in range(1, 6):
        assert rel_err(values(M.R(t), pts), Rg) <= 1e-12
        assert rel_err(values(M.R_closed(t), pts), Rg) <= 1e-12
    assert np.all(values(M.M1, pts) == 0) and np.all(values(M.V, pts) == 0)


# ----------------------------------------------------------------------------
# identities on random manifolds
# ----------------------------------------------------------------------------

@pytest.mark.parametrize("seed,dim", RANDOM)
def test_curvature_identities(seed, dim):
    M = random_qs(seed, dim)
    pts = M.chart.standard_points()
    v = lambda f: values(f, pts)   # noqa: E731
    assert np.abs(v(M.R0) - v(M.Rg)).max() <= 1e-12
    for t in range(1, 6):
        assert rel_err(v(M.R(t)), v(M.R_closed(t))) <= 1e-9
        R = M.R(t).field
        assert rel_err(v(R + swap_xy(R)), v(skew_symmetry_rhs(M.gen, M.A, M.metric, M.lc, t, M.aux))) <= 1e-9
        assert rel_err(v(cyclic_sum(R, (1, 2, 3))), v(bianchi_rhs(M.gen, M.A, M.metric, M.lc, t, M.aux))) <= 1e-9
    R5 = M.R5.field
    assert rel_err(v(R5 - swap_xy(R5)), v(M.Rg) * 2) <= 1e-9
    assert rel_err(v(M.R1) - v(M.Rg), v((M.M1 - swap_xy(M.M1)) * 0.5)) <= 1e-9
    assert rel_err(v(M.R2) - v(M.Rg), v((M.M2 - swap_xy(M.M2)) * -0.5)) <= 1e-9
    for R in (M.Rg, M.R0, M.R1, M.R2):
        assert rel_err(v(R), -v(swap_xy(R))) <= 1e-12


@pytest.mark.parametrize("seed,dim", RANDOM)
def test_aux_tensor_invariants(seed, dim):
    M = random_qs(seed, dim)
    pts = M.chart.standard_points()
    b = values(M.aux.beta1, pts)
    np.testing.assert_array_equal(b, -np.swapaxes(b, 1, 2))
    d = values(M.aux.delta1, pts)
    np.testing.assert_array_equal(d, -np.swapaxes(d, 2, 3))
    a1 = values(M.aux.alpha1, pts)
    assert rel_err(a1, values(nabla1_pi_closed(M.gen, M.A, M.metric, M.lc), pts)) <= 1e-12
    assert rel_err(a1, values(M.nabla("1", M.gen.pi), pts)) <= 1e-9


def test_bianchi_fails_for_a_non_dual_pair(m3):
    """The identities depend on L2 being the dual of L1."""
    pts = m3.chart.standard_points()
    R4 = curvature_mixed(m3.L1, m3.lc, 4).field
    assert np.abs(values(cyclic_sum(R4, (1, 2, 3)), pts)).max() > 1e-4


# ----------------------------------------------------------------------------
# conjugate symmetry
# ----------------------------------------------------------------------------

def test_conjugate_symmetry_both_directions(e1):
    pts = e1.chart.standard_points()
    assert np.abs(values(e1.R1, pts) - values(e1.R2, pts)).max() <= 1e-12
    assert np.abs(values(e1.V - swap_xy(e1.V), pts)).max() <= 1e-12
    M = QSManifold.from_spec(asymmetric_v_spec())
    pts = M.chart.standard_points()
    d_R = np.abs(values(M.R1, pts) - values(M.R2, pts)).max()
    d_V = np.abs(values(M.V - swap_xy(M.V), pts)).max()
    assert d_R > 1e-6 and d_V > 1e-6


# ----------------------------------------------------------------------------
# Nijenhuis tensors
# ----------------------------------------------------------------------------

def structure(chart, rows):
    return StructureField(TensorField.from_strings(chart, (1, 1), rows))


def lie_bracket_oracle(Af, i, j, p):
    """N(d_i, d_j) = [Ad_i, Ad_j] - A[Ad_i, d_j] - A[d_i, Ad_j] with numeric brackets."""
    def col(k):
        return lambda q: Af(q)[:, k]

    def bracket(U, V, q):
        # [U, V]^k = U^m d_m V^k - V^m d_m U^k
        return U(q) @ fd_partial(V, q) - V(q) @ fd_partial(U, q)

    zero = lambda q: np.zeros(len(p))   # noqa: E731
    const = lambda k: (lambda q: np.eye(len(p))[k])   # noqa: E731
    A = Af(p)
    return (bracket(col(i), col(j), p) - A @ bracket(col(i), const(j), p)
            - A @ bracket(const(i), col(j), p) + A @ A @ bracket(zero, zero, p))


def test_nijenhuis_constant_and_2d_complex_structure():
    c2 = Chart(2, ("x", "y"))
    A = structure(c2, [["0", "-1"], ["1", "0"]])
    assert np.all(values(nijenhuis_classical(A), c2.standard_points()) == 0)
    # an almost complex structure varying from point to point (A^2 = -1 everywhere)
    A = structure(c2, [["x*y", "1 + y^2"], ["-(1 + x^2*y^2)/(1 + y^2)", "-x*y"]])
    pts = c2.standard_points()
    Av = values(A.A, pts)
    np.testing.assert_allclose(Av @ Av, -np.broadcast_to(np.eye(2), Av.shape), atol=1e-14)
    assert np.abs(values(nijenhuis_classical(A), pts)).max() <= 1e-12


def test_nijenhuis_nonintegrable_4d_matches_bracket_oracle():
    c4 = Chart.default(4)
    A = structure(c4, [["0", "-1/(1 + x3^2)", "0", "x2"],
                       ["1 + x3^2", "0", "0", "0"],
                       ["0", "0", "0", "-1"],
                       ["x1", "0", "1", "0"]])
    N = nijenhuis_classical(A)
    p = np.array([0.3, -0.2, 0.5, 0.1])
    Nv = tensor_eval(N, p)
    assert np.abs(Nv).max() > 0.1
    np.testing.assert_array_equal(Nv, -Nv.transpose(0, 2, 1))
    for i, j in product(range(4), repeat=2):
        oracle = lie_bracket_oracle(lambda q: tensor_eval(A.A, q), i, j, p)
        np.testing.assert_allclose(Nv[:, i, j], oracle, atol=1e-8)


def test_n1_vanishes_for_zero_structure(m3):
    A0 = StructureField(TensorField.zeros(m3.chart, (1, 1)))
    N1 = n1_tensor(m3.L1, A0, covariant_derivative(m3.L1, A0.A))
    assert np.all(values(N1, m3.chart.standard_points()) == 0)


def test_e1_n1_terms_cancel(e1):
    p = (0.0, 0.0)
    assert np.all(tensor_eval(e1.N1, p) == 0) and np.all(tensor_eval(e1.N, p) == 0)
    nA = tensor_eval(e1.nabla("1", e1.A.A), p)
    assert np.abs(nA).max() == 0.5    # the individual terms are not zero


@pytest.mark.parametrize("seed,dim", RANDOM)
def test_N_equals_N1_and_torsion_combination(seed, dim):
    M = random_qs(seed, dim)
    pts = M.chart.standard_points()
    N = values(M.N, pts)
    assert rel_err(N, values(M.N1, pts)) <= 1e-9
    assert np.abs(values(torsion_combination(M.T.T12, M.A), pts)).max() <= 1e-12
    if dim > 2:
        assert np.abs(N).max() > 1e-5    # O(eps^2) for the default random skew part


# ----------------------------------------------------------------------------
# exterior derivatives and cyclic sums
# ----------------------------------------------------------------------------

def test_dF_example_and_constant_F():
    c3 = Chart.default(3)
    F = TensorField.from_strings(c3, (0, 2), [["0", "x3", "0"], ["-x3", "0", "0"], ["0", "0", "0"]])
    dF = tensor_eval(exterior_derivative_F(F), (0.1, 0.2, 0.3))
    assert dF[2, 0, 1] == 1
    for perm, sign in [((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1), ((1, 0, 2), -1)]:
        assert dF[perm] == sign
    const = TensorField.from_strings(c3, (0, 2), [["0", "2", "1"], ["-2", "0", "3"], ["-1", "-3", "0"]])
    assert np.all(tensor_eval(exterior_derivative_F(const), (0, 0, 0)) == 0)


@pytest.mark.parametrize("seed,dim", RANDOM)
def test_d1F_equals_dF(seed, dim):
    M = random_qs(seed, dim)
    pts = M.chart.standard_points()
    dF = values(M.dF, pts)
    if dim == 2:
        assert np.all(dF == 0) and np.all(values(M.d1F, pts) == 0)
    else:
        assert np.abs(dF).max() > 1e-3
        assert rel_err(values(M.d1F, pts), dF) <= 1e-9
    # full antisymmetry
    for axes in ((1, 0, 2), (0, 2, 1), (2, 1, 0)):
        np.testing.assert_allclose(dF, -np.transpose(dF, (0,) + tuple(a + 1 for a in axes)), atol=1e-14)


def test_cyclic_sum_properties():
    rng = np.random.default_rng(0)
    arr = rng.normal(size=(3, 3, 3, 3))
    once = cyclic_sum_array(arr, (1, 2, 3))
    np.testing.assert_allclose(cyclic_sum_array(once, (1, 2, 3)), 3 * once, atol=1e-12)
    # brute force over index triples
    for l, i, j, k in product(range(3), repeat=4):
        assert once[l, i, j, k] == pytest.approx(arr[l, i, j, k] + arr[l, j, k, i] + arr[l, k, i, j])
    # fully antisymmetric input: the cyclic sum is three times the input
    eps = np.zeros((3, 3, 3))
    for (a, b, c), s in [((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                         ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1)]:
        eps[a, b, c] = s
    np.testing.assert_array_equal(cyclic_sum_array(eps), 3 * eps)
    # T symmetric in its last two slots: sigma (T(a,b,c) - T(b,a,c)) = 0, checked entrywise (n = 2)
    S = rng.normal(size=(2, 2, 2))
    S = S + S.transpose(0, 2, 1)
    alt = S - S.transpose(1, 0, 2)
    assert np.abs(cyclic_sum_array(alt)).max() <= 1e-15


def test_cyclic_sum_slot_validation():
    c2 = Chart.default(2)
    T = TensorField.zeros(c2, (1, 3))
    with pytest.raises(ValueError):
        cyclic_sum(T, (0, 1, 2))
    with pytest.raises(ValueError):
        cyclic_sum(T, (1, 1, 2))
