"""Chart layer: truncated exp/log, grade maps, derivative checks, word maps.

The closed-form oracles here are matrices whose series terminate by hand:
nilpotents (one term), commuting diagonals (termwise scalar exp), and
integral conjugations (Ad commutes with log exactly).
"""

import itertools
import math
import random
from fractions import Fraction

import pytest

from specgap.charts import (
    ChartConfig,
    LieVector,
    MatrixPolynomial,
    chart_floor,
    derivative_limit_check,
    grade_map,
    standard_basis,
    trunc_exp,
    trunc_log,
    word_map,
)
from specgap.errors import (
    NotInChartDomain,
    PrecisionExhausted,
    WrongLevel,
)
from specgap.exact import PadicTruncMatrix, RationalMatrix


def mat(rows, p, N):
    return PadicTruncMatrix(rows, p, N)


def det2_mod(g: PadicTruncMatrix) -> int:
    a, b = g.rows[0]
    c, d = g.rows[1]
    return (a * d - b * c) % (g.p ** g.N)


# ---------------------------------------------------------------------------
# config plumbing


def test_chart_floor():
    assert chart_floor(2) == 2
    for p in (3, 5, 7, 101):
        assert chart_floor(p) == 1


def test_config_validation():
    ChartConfig(p=3, N=4, c=1)
    ChartConfig(p=2, N=5, c=2)
    with pytest.raises(ValueError):
        ChartConfig(p=2, N=5, c=1)  # below the p=2 floor
    with pytest.raises(ValueError):
        ChartConfig(p=5, N=1, c=1)  # N must exceed c
    with pytest.raises(ValueError):
        ChartConfig(p=1, N=3, c=1)
    assert ChartConfig(p=3, N=4, c=1).modulus == 81


# ---------------------------------------------------------------------------
# closed-form oracles for exp and log


@pytest.mark.parametrize("p", [2, 3, 5])
def test_nilpotent_exp_is_single_term(p):
    # x = p^c E12 squares to zero, so the series is exactly I + x.
    c = chart_floor(p)
    cfg = ChartConfig(p=p, N=c + 3, c=c)
    x = mat([[0, p**c], [0, 0]], p, cfg.N)
    g = trunc_exp(x, cfg)
    assert g.rows == ((1, p**c), (0, 1))
    back = trunc_log(g, cfg)
    assert back.mat.rows == x.rows


@pytest.mark.parametrize("p", [3, 5])
def test_commuting_diagonals_add(p):
    cfg = ChartConfig(p=p, N=5, c=1)
    x = mat([[p, 0], [0, 2 * p]], p, cfg.N)
    y = mat([[3 * p, 0], [0, p]], p, cfg.N)
    lhs = trunc_exp(x + y, cfg)
    rhs = trunc_exp(x, cfg) @ trunc_exp(y, cfg)
    assert lhs.rows == rhs.rows


@pytest.mark.parametrize("p,N", list(itertools.product([2, 3, 5, 7], [3, 4, 5])))
def test_roundtrip_preserves_norms(p, N):
    c = chart_floor(p)
    if N <= c:
        pytest.skip("precision below chart floor")
    cfg = ChartConfig(p=p, N=N, c=c)
    q = p**N
    rng = random.Random(1000 * p + N)
    for _ in range(40):
        rows = [[p**c * rng.randrange(q // p**c) for _ in range(2)] for _ in range(2)]
        x = mat(rows, p, N)
        g = trunc_exp(x, cfg)
        # norm identity: exp moves nothing closer to or further from I
        assert (g - PadicTruncMatrix.identity(2, p, N)).valuation() == x.valuation()
        back = trunc_log(g, cfg)
        assert back.mat.rows == x.rows
        # and the other composition order
        again = trunc_exp(back.mat, cfg)
        assert again.rows == g.rows


def test_log_norm_identity():
    cfg = ChartConfig(p=5, N=4, c=1)
    g = mat([[1 + 5, 25], [0, 1 + 2 * 25]], 5, 4)
    x = trunc_log(g, cfg)
    assert x.valuation() == (g - PadicTruncMatrix.identity(2, 5, 4)).valuation() == 1


@pytest.mark.parametrize("p", [3, 5])
def test_traceless_exp_lands_in_sl(p):
    # det(exp x) = exp(tr x); truncation only moves entries by p^N multiples,
    # and det has integer coefficients, so the residue is exact.
    cfg = ChartConfig(p=p, N=4, c=1)
    rng = random.Random(p)
    for _ in range(25):
        a = p * rng.randrange(p**3)
        b = p * rng.randrange(p**3)
        c = p * rng.randrange(p**3)
        x = mat([[a, b], [c, -a]], p, cfg.N)
        assert det2_mod(trunc_exp(x, cfg)) == 1


def test_domain_checks():
    cfg = ChartConfig(p=5, N=4, c=1)
    with pytest.raises(NotInChartDomain):
        trunc_exp(mat([[0, 1], [0, 0]], 5, 4), cfg)  # valuation 0 < c
    with pytest.raises(NotInChartDomain):
        trunc_log(mat([[2, 0], [0, 1]], 5, 4), cfg)  # g - I is a unit
    with pytest.raises(ValueError):
        trunc_exp(mat([[0, 5], [0, 0]], 5, 3), cfg)  # precision below cfg.N
    with pytest.raises(ValueError):
        trunc_exp(mat([[0, 3], [0, 0]], 3, 4), cfg)  # wrong prime


# ---------------------------------------------------------------------------
# polynomial functionals and the derivative check


def leibniz_det(rows):
    n = len(rows)
    out = Fraction(0)
    for perm in itertools.permutations(range(n)):
        sign = (-1) ** sum(
            1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j]
        )
        term = Fraction(sign)
        for i in range(n):
            term *= Fraction(rows[i][perm[i]])
        out += term
    return out


@pytest.mark.parametrize("n", [2, 3])
def test_matrix_polynomial_det_and_trace(n):
    rng = random.Random(77 + n)
    det = MatrixPolynomial.determinant(n)
    tr = MatrixPolynomial.trace(n)
    for _ in range(20):
        rows = [
            [Fraction(rng.randrange(-9, 10), rng.randrange(1, 7)) for _ in range(n)]
            for _ in range(n)
        ]
        assert det.evaluate(rows) == leibniz_det(rows)
        assert tr.evaluate(rows) == sum(rows[i][i] for i in range(n))


@pytest.mark.parametrize("n", [2, 3])
def test_det_gradient_is_trace_functional(n):
    grad = MatrixPolynomial.determinant(n).gradient_at_identity()
    assert grad == {(i, i): Fraction(1) for i in range(n)}


def test_derivative_check_for_det():
    cfg = ChartConfig(p=5, N=6, c=1)
    det = MatrixPolynomial.determinant(2)
    rng = random.Random(42)
    for n in (1, 2, 3):
        for _ in range(10):
            rows = [[5 * rng.randrange(5**5) for _ in range(2)] for _ in range(2)]
            res = derivative_limit_check(det, mat(rows, 5, 6), n, cfg)
            assert res.ok
            assert res.diff_valuation >= res.required_valuation == n


def test_derivative_check_guards():
    cfg = ChartConfig(p=5, N=6, c=1)
    det = MatrixPolynomial.determinant(2)
    x = mat([[5, 0], [0, 5]], 5, 6)
    with pytest.raises(ValueError):
        derivative_limit_check(det, x, 0, cfg)
    with pytest.raises(PrecisionExhausted):
        derivative_limit_check(det, x, 4, cfg)  # 2n > N
    bad = MatrixPolynomial(2, {((0, 0, 1),): Fraction(1, 5)})
    with pytest.raises(PrecisionExhausted):
        derivative_limit_check(bad, x, 1, cfg)


# ---------------------------------------------------------------------------
# grade maps


def test_grade_map_levels():
    p = 5
    g = mat([[1 + 5 * 2, 5 * 3], [0, 1 + 5 * 4]], p, 3)
    psi = grade_map(g, 1)
    assert psi.N == 1
    assert psi.mat.rows == ((2, 3), (0, 4))
    with pytest.raises(WrongLevel):
        grade_map(g, 0)
    with pytest.raises(WrongLevel):
        grade_map(g, 3)  # needs precision k+1 = 4 > 3
    unit = mat([[2, 0], [0, 1]], p, 3)
    with pytest.raises(WrongLevel):
        grade_map(unit, 1)  # g - I not divisible by p


@pytest.mark.parametrize("p,k", list(itertools.product([3, 5], [1, 2])))
def test_grade_map_additive(p, k):
    # (I + p^k a)(I + p^k b) = I + p^k (a + b) + p^{2k} ab, and 2k >= k+1.
    N = k + 1
    q = p**N
    rng = random.Random(10 * p + k)
    for _ in range(30):
        a = [[rng.randrange(p) for _ in range(2)] for _ in range(2)]
        b = [[rng.randrange(p) for _ in range(2)] for _ in range(2)]
        g = mat([[(int(i == j) + p**k * a[i][j]) % q for j in range(2)] for i in range(2)], p, N)
        h = mat([[(int(i == j) + p**k * b[i][j]) % q for j in range(2)] for i in range(2)], p, N)
        lhs = grade_map(g @ h, k)
        rhs = (grade_map(g, k).mat + grade_map(h, k).mat).rows
        assert lhs.mat.rows == rhs


@pytest.mark.parametrize("p", [3, 5])
def test_grade_map_ad_equivariant(p):
    # Psi(γ g γ⁻¹) = Ad(γ) Psi(g) over the residue field.
    k, N = 1, 2
    q = p**N
    gam = RationalMatrix([[1, 1], [0, 1]])
    gam_inv = gam.inverse()
    rng = random.Random(p + 3)
    for _ in range(30):
        a = [[rng.randrange(p) for _ in range(2)] for _ in range(2)]
        g = mat([[(int(i == j) + p * a[i][j]) % q for j in range(2)] for i in range(2)], p, N)
        gm = mat([[int(v) % q for v in row] for row in gam.rows], p, N)
        gmi = mat([[int(v) % q for v in row] for row in gam_inv.rows], p, N)
        conj = gm @ g @ gmi
        lhs = grade_map(conj, k).mat
        am = mat(a, p, 1)
        rhs = (
            mat([[int(v) % p for v in row] for row in gam.rows], p, 1)
            @ am
            @ mat([[int(v) % p for v in row] for row in gam_inv.rows], p, 1)
        )
        assert lhs.rows == rhs.rows


# ---------------------------------------------------------------------------
# word maps


def test_word_map_identity_conjugator():
    cfg = ChartConfig(p=5, N=4, c=1)
    x = mat([[5, 10], [0, 20]], 5, 4)
    ident = RationalMatrix.identity(2)
    res = word_map([x], [ident], cfg)
    assert res.value.mat.rows == x.rows
    assert res.head.mat.rows == x.rows
    assert res.head_ok
    # linearization is the 4x4 identity, so the top minor is a unit
    assert res.minor_exponent == 0
    assert res.minor_value == 1.0


def test_word_map_two_factor_head():
    cfg = ChartConfig(p=5, N=4, c=1)
    x = mat([[5, 0], [5, 10]], 5, 4)
    y = mat([[0, 5], [0, 5]], 5, 4)
    ident = RationalMatrix.identity(2)
    res = word_map([x, y], [ident, ident], cfg)
    assert res.head_margin == min(cfg.N, 2 * cfg.c) == 2
    assert res.head.mat.rows == (x + y).rows
    assert res.head_ok
    # the product genuinely differs from exp(x+y) past the head
    assert res.value.mat.rows != res.head.mat.rows


def test_word_map_single_conjugation_is_exact():
    # log(γ exp(x) γ⁻¹) = Ad(γ) x with no commutator tail at all.
    cfg = ChartConfig(p=5, N=4, c=1)
    x = mat([[5, 10], [15, 20]], 5, 4)
    gam = RationalMatrix([[1, 2], [0, 1]])
    res = word_map([x], [gam], cfg)
    q = 5**4
    gm = mat([[int(v) % q for v in row] for row in gam.rows], 5, 4)
    gmi = mat([[int(v) % q for v in row] for row in gam.inverse().rows], 5, 4)
    expected = gm @ x @ gmi
    assert res.value.mat.rows == expected.rows
    assert res.head.mat.rows == expected.rows


def test_word_map_sub_basis_minor():
    cfg = ChartConfig(p=5, N=3, c=1)
    x = mat([[0, 5], [0, 0]], 5, 3)
    ident = RationalMatrix.identity(2)
    sl2 = [[0, 1, 0, 0], [0, 0, 1, 0], [1, 0, 0, -1]]
    res = word_map([x], [ident], cfg, sub_basis=sl2, target_dim=3)
    assert len(res.linearization) == 4
    assert len(res.linearization[0]) == 3
    assert res.minor_exponent == 0
    assert res.minor_value == 1.0


def test_word_map_guards():
    cfg = ChartConfig(p=5, N=3, c=1)
    ident = RationalMatrix.identity(2)
    with pytest.raises(ValueError):
        word_map([], [], cfg)
    with pytest.raises(ValueError):
        word_map([mat([[0, 5], [0, 0]], 5, 3)], [ident, ident], cfg)
    with pytest.raises(NotInChartDomain):
        word_map([mat([[0, 1], [0, 0]], 5, 3)], [ident], cfg)


def test_standard_basis_flat_layout():
    basis = standard_basis(2)
    assert basis == [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
