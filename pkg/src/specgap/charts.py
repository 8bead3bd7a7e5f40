"""Truncated p-adic logarithm/exponential charts and grade maps.

The chart domain at depth c consists of matrices g ≡ I mod p^c, where c is at
least 1 for odd p and at least 2 for p = 2.  On that domain the series

    exp(x) = Σ x^i / i!        log(g) = - Σ (I - g)^i / i

terminate modulo p^N, and with enough guard digits every division by i! or i
is exact, so exp and log are mutually inverse bijections between p^c·𝔤𝔩_n
and the chart layer, preserving p-adic norms on the nose.

Guard digits are provisioned by exact accounting rather than a closed
formula: a term contributes mod p^N only while (term valuation) < N, and the
working precision is N plus the worst divisor valuation among contributing
terms.  Terms that provably vanish mod p^N are skipped outright; including
them would smuggle representative noise into the sum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    NotInChartDomain,
    PrecisionExhausted,
    WrongLevel,
)
from .exact import PadicTruncMatrix, RationalMatrix, reduce_mod
from .modring import vp


def chart_floor(p: int) -> int:
    """Minimal legal chart depth: 1 for odd p, 2 for p = 2."""
    return 1 if p % 2 else 2


@dataclass(frozen=True)
class ChartConfig:
    p: int
    N: int
    c: int

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("p must be a prime")
        if self.c < chart_floor(self.p):
            raise ValueError(
                f"chart depth {self.c} below the floor {chart_floor(self.p)} for p={self.p}"
            )
        if self.N <= self.c:
            raise ValueError("precision N must exceed the chart depth c")

    @property
    def modulus(self) -> int:
        return self.p**self.N


@dataclass(frozen=True)
class LieVector:
    """Chart-side vector: an n x n matrix over ℤ/p^N in flat coordinates."""

    mat: PadicTruncMatrix

    @property
    def p(self) -> int:
        return self.mat.p

    @property
    def N(self) -> int:
        return self.mat.N

    def flat(self):
        return self.mat.flat()

    def valuation(self) -> int:
        return self.mat.valuation()


def _as_matrix(x) -> PadicTruncMatrix:
    return x.mat if isinstance(x, LieVector) else x


def _vfact(i: int, p: int) -> int:
    """v_p(i!) by Legendre's digit formula."""
    s = 0
    x = i
    while x:
        s += x % p
        x //= p
    return (i - s) // (p - 1)


def _series_plan(p: int, N: int, c: int, divisor: str):
    """Contributing indices and worst divisor valuation for a chart series.

    divisor 'factorial' plans exp (term x^i/i!), 'linear' plans log
    (term D^i/i).  A term contributes iff i*c - v_p(divisor_i) < N; the plan
    is exhaustive because term valuations grow linearly while divisor
    valuations grow at most logarithmically (linear/(p-1) for factorials,
    and c > 1/(p-1) on every legal chart).
    """
    contributing = []
    worst = 0
    if divisor == "factorial":
        # i*c - (i-1)/(p-1) >= N for all i beyond this bound
        hi = (N * (p - 1) - 1) / (c * (p - 1) - 1)
        stop = int(math.floor(hi)) + 2
        for i in range(1, stop + 1):
            v = _vfact(i, p)
            if i * c - v < N:
                contributing.append((i, v))
                worst = max(worst, v)
    else:
        i = 1
        while True:
            v = vp(i, p, 64)
            if i * c - v < N:
                contributing.append((i, v))
                worst = max(worst, v)
            # beyond this point i*c - log_p(i) is >= N and increasing
            if i * c - math.log(i) / math.log(p) >= N and i > p:
                break
            i += 1
    return contributing, worst


def _series_eval(base: PadicTruncMatrix, plan, p: int, N: int, worst: int,
                 divisor: str) -> PadicTruncMatrix:
    """Σ over the plan of base^i / divisor_i, computed mod p^(N + worst)."""
    nprime = N + worst
    q = p**nprime
    lifted = base.lift_to(nprime)
    acc = PadicTruncMatrix.zero(base.n, p, nprime)
    power = PadicTruncMatrix.identity(base.n, p, nprime)
    idx = 0
    want = {i for i, _ in plan}
    maxi = max(want) if want else 0
    for i in range(1, maxi + 1):
        power = power @ lifted
        if i not in want:
            continue
        v = plan[idx][1]
        idx += 1
        d = math.factorial(i) if divisor == "factorial" else i
        pv = p**v
        unit = d // pv
        if unit % p == 0:  # pragma: no cover - plan guarantees exact split
            raise PrecisionExhausted("divisor valuation misplanned")
        uinv = pow(unit, -1, q)
        rows = []
        for r in power.rows:
            row = []
            for x in r:
                if x % pv:
                    raise PrecisionExhausted(
                        "term not divisible by its planned p-power; slack consumed"
                    )
                row.append((x // pv) * uinv % q)
            rows.append(row)
        acc = acc + PadicTruncMatrix(rows, p, nprime)
    return acc.reduce_to(N)


def trunc_exp(x, cfg: ChartConfig) -> PadicTruncMatrix:
    """exp on the chart: needs v_p(x) >= c; lands at I mod p^c exactly."""
    xm = _as_matrix(x)
    if xm.p != cfg.p or xm.N < cfg.N:
        raise ValueError("vector precision does not match the chart")
    xm = xm.reduce_to(cfg.N)
    if xm.valuation() < cfg.c:
        raise NotInChartDomain(
            f"valuation {xm.valuation()} below chart depth {cfg.c}"
        )
    plan, worst = _series_plan(cfg.p, cfg.N, cfg.c, "factorial")
    s = _series_eval(xm, plan, cfg.p, cfg.N, worst, divisor="factorial")
    return PadicTruncMatrix.identity(xm.n, cfg.p, cfg.N) + s


def trunc_log(g: PadicTruncMatrix, cfg: ChartConfig) -> LieVector:
    """log on the chart: needs g ≡ I mod p^c; v_p(log g) = v_p(g - I)."""
    if g.p != cfg.p or g.N < cfg.N:
        raise ValueError("element precision does not match the chart")
    g = g.reduce_to(cfg.N)
    d = PadicTruncMatrix.identity(g.n, cfg.p, cfg.N) - g
    if d.valuation() < cfg.c:
        raise NotInChartDomain(
            f"g - I has valuation {d.valuation()}, below chart depth {cfg.c}"
        )
    plan, worst = _series_plan(cfg.p, cfg.N, cfg.c, "linear")
    s = _series_eval(d, plan, cfg.p, cfg.N, worst, divisor="linear")
    return LieVector(-s)


def grade_map(g: PadicTruncMatrix, k: int) -> LieVector:
    """Ψ_k: (I + p^k x)·[deeper layer] ↦ x mod p.

    Defined on elements at congruence level exactly >= k, at any working
    precision N >= k + 1.  The value is a mod-p Lie vector; on the quotient
    of level-k by level-(k+1) it is an additive bijection onto 𝔤/p𝔤,
    equivariant for conjugation through the adjoint action mod p.
    """
    if k < 1:
        raise WrongLevel("grade level k must be >= 1")
    if g.N < k + 1:
        raise WrongLevel(f"need precision at least p^{k+1} to read grade {k}")
    d = g - PadicTruncMatrix.identity(g.n, g.p, g.N)
    if d.valuation() < k:
        raise WrongLevel(
            f"g - I has valuation {d.valuation()}, not >= {k}"
        )
    x = d.div_exact_pow(k)
    return LieVector(x.reduce_to(1))


class MatrixPolynomial:
    """Polynomial in the n^2 matrix entries with exact rational coefficients."""

    def __init__(self, n: int, terms: dict):
        # terms: {((i,j,e), ...) sorted tuple: Fraction coefficient}
        self.n = n
        self.terms = {k: Fraction(v) for k, v in terms.items() if v != 0}

    @classmethod
    def determinant(cls, n: int) -> "MatrixPolynomial":
        terms = {}
        for perm in itertools.permutations(range(n)):
            inv = sum(
                1 for a in range(n) for b in range(a + 1, n) if perm[a] > perm[b]
            )
            key = tuple(sorted((i, perm[i], 1) for i in range(n)))
            terms[key] = Fraction(-1 if inv % 2 else 1)
        return cls(n, terms)

    @classmethod
    def trace(cls, n: int) -> "MatrixPolynomial":
        return cls(n, {((i, i, 1),): Fraction(1) for i in range(n)})

    def evaluate(self, rows) -> Fraction:
        out = Fraction(0)
        for key, coeff in self.terms.items():
            v = coeff
            for i, j, e in key:
                v *= Fraction(rows[i][j]) ** e
            out += v
        return out

    def gradient_at_identity(self):
        """{(i, j): ∂f/∂X_ij evaluated at I}, exact."""
        ident = [[Fraction(int(a == b)) for b in range(self.n)] for a in range(self.n)]
        grad = {}
        for key, coeff in self.terms.items():
            for t, (i, j, e) in enumerate(key):
                v = coeff * e * ident[i][j] ** (e - 1)
                for s, (a, b, ee) in enumerate(key):
                    if s != t:
                        v *= ident[a][b] ** ee
                if v:
                    grad[(i, j)] = grad.get((i, j), Fraction(0)) + v
        return grad


@dataclass
class DerivativeCheck:
    ok: bool
    required_valuation: int
    diff_valuation: int
    lhs_flat: tuple
    rhs_flat: tuple


def derivative_limit_check(f: MatrixPolynomial, x, n: int, cfg: ChartConfig) -> DerivativeCheck:
    """Difference-quotient test: (f(exp(p^n x)) - f(I))/p^n ≈ (df)_I(x).

    Verifies the p-adic distance between the two sides is at most |p^n|_p,
    with every quantity computed exactly mod p^N.  Needs 2n <= N so the
    quotient retains enough precision to certify the bound.
    """
    xm = _as_matrix(x)
    if n < 1:
        raise ValueError("limit exponent n must be >= 1")
    if 2 * n > cfg.N:
        raise PrecisionExhausted(
            f"need 2n <= N to certify the bound, got n={n}, N={cfg.N}"
        )
    p, N = cfg.p, cfg.N
    q = p**N
    denom_lcm = math.lcm(*(c.denominator for c in f.terms.values())) if f.terms else 1
    if denom_lcm % p == 0:
        raise PrecisionExhausted("polynomial coefficients have p in a denominator")
    g = trunc_exp(xm.scale(p**n), cfg)
    fg = f.evaluate(g.rows)
    fi = f.evaluate([[int(a == b) for b in range(g.n)] for a in range(g.n)])

    def frac_mod(v: Fraction, modulus: int) -> int:
        return v.numerator * pow(v.denominator, -1, modulus) % modulus

    diff = frac_mod(fg - fi, q)
    if diff % p**n:
        raise PrecisionExhausted("f(exp(p^n x)) - f(I) not divisible by p^n")
    q2 = p ** (N - n)
    lhs = diff // p**n % q2
    grad = f.gradient_at_identity()
    rhs = Fraction(0)
    for (i, j), w in grad.items():
        rhs += w * xm.rows[i][j]
    rhs = frac_mod(rhs, q2)
    dv = vp((lhs - rhs) % q2, p, N - n)
    return DerivativeCheck(
        ok=dv >= n,
        required_valuation=n,
        diff_valuation=dv,
        lhs_flat=(lhs,),
        rhs_flat=(rhs,),
    )


@dataclass
class WordMapResult:
    value: LieVector
    head: LieVector
    head_margin: int
    head_ok: bool
    linearization: list
    minor_exponent: int | None
    minor_value: float


def standard_basis(n: int):
    """Flat coordinates of the elementary matrices E_kl (row-major order)."""
    out = []
    for k in range(n):
        for L in range(n):
            out.append([1 if (i == k and j == L) else 0 for i in range(n) for j in range(n)])
    return out


def word_map(xs, conjugators, cfg: ChartConfig, sub_basis=None, target_dim=None,
             sub_basis_precision: int | None = None) -> WordMapResult:
    """Composite chart map: log of Π γ_i exp(x_i) γ_i⁻¹.

    Returns the chart value, the linear head Σ Ad(γ_i)(x_i) with its
    congruence margin (the difference has valuation >= 2c, the first
    commutator depth), the block linearization [Ad(γ_1)|...|Ad(γ_m)]
    restricted to sub_basis columns, and the largest p-adic absolute value
    over target_dim x target_dim minors of that block.

    The sub_basis should be unit-scale algebra directions.  When it was
    obtained by dividing a chart-layer lattice by p^c it is only canonical
    mod p^(N-c); pass that as sub_basis_precision so the minors are judged
    at a precision the data actually supports.
    """
    from .modring import minor_norm as _minor_norm

    if len(xs) != len(conjugators):
        raise ValueError("one conjugator per chart vector")
    if not xs:
        raise ValueError("word map needs at least one factor")
    p, N = cfg.p, cfg.N
    prec = N if sub_basis_precision is None else int(sub_basis_precision)
    if not 1 <= prec <= N:
        raise ValueError("sub-basis precision must lie in [1, N]")
    q = p**N
    n = _as_matrix(xs[0]).n
    prod = PadicTruncMatrix.identity(n, p, N)
    heads = PadicTruncMatrix.zero(n, p, N)
    ad_pairs = []
    for x, gamma in zip(xs, conjugators):
        xm = _as_matrix(x)
        if xm.valuation() < cfg.c:
            raise NotInChartDomain("word map inputs must sit at chart depth")
        r = reduce_mod(gamma, q)
        rinv = reduce_mod(gamma.inverse(), q)
        rp = PadicTruncMatrix(r.rows, p, N)
        rpi = PadicTruncMatrix(rinv.rows, p, N)
        ad_pairs.append((rp, rpi))
        prod = prod @ (rp @ trunc_exp(xm, cfg) @ rpi)
        heads = heads + (rp @ xm @ rpi)
    value = trunc_log(prod, cfg)
    margin = min(N, 2 * cfg.c)
    diff = value.mat - heads
    head_ok = diff.valuation() >= margin

    basis = sub_basis if sub_basis is not None else standard_basis(n)
    cols = []
    for rp, rpi in ad_pairs:
        for b in basis:
            bm = PadicTruncMatrix([list(b[i * n : (i + 1) * n]) for i in range(n)], p, N)
            cols.append((rp @ bm @ rpi).flat())
    # linearization rows are ambient flat coordinates; columns run over
    # (conjugator, basis vector) pairs
    qp = p**prec
    lin = [[int(cols[cidx][ridx]) % qp for cidx in range(len(cols))] for ridx in range(n * n)]
    d = target_dim if target_dim is not None else n * n
    mexp, mval = _minor_norm(lin, p, prec, d)
    return WordMapResult(
        value=value,
        head=LieVector(heads),
        head_margin=margin,
        head_ok=head_ok,
        linearization=lin,
        minor_exponent=mexp,
        minor_value=mval,
    )
