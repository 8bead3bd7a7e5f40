"""Exact matrix arithmetic over ℚ, ℤ/m, and truncated p-adic integers.

Three matrix flavors cover the package's needs:

* ``RationalMatrix`` holds exact rational entries.  Generating sets live here
  before any reduction, so a single object can be reduced at every modulus of
  interest without accumulated error.
* ``ResidueMatrix`` holds entries mod an arbitrary modulus m, with a canonical
  byte encoding (row-major, fixed-width big-endian entries) used as the
  identity of an element in group tables and cache files.
* ``PadicTruncMatrix`` holds entries mod p^N with valuation bookkeeping
  saturated at N; the chart series in :mod:`specgap.charts` run on it.

Everything here stays in plain Python integers (sizes are small, n ≤ 8) so
that no intermediate ever rounds.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import BadModulus, NonInvertibleDenominator, SingularMatrix

__all__ = [
    "RationalMatrix",
    "ResidueMatrix",
    "PadicTruncMatrix",
    "reduce_mod",
    "invert_mod",
    "encode_width",
]


def _small_prime_factors(x: int):
    x = abs(int(x))
    out = set()
    d = 2
    while d * d <= x:
        while x % d == 0:
            out.add(d)
            x //= d
        d += 1 if d == 2 else 2
    if x > 1:
        out.add(x)
    return out


def encode_width(m: int) -> int:
    """Bytes per entry in the canonical encoding: ceil(log_256 m)."""
    if m < 2:
        return 1
    return max(1, ((m - 1).bit_length() + 7) // 8)


class RationalMatrix:
    """Immutable square matrix with Fraction entries."""

    __slots__ = ("n", "rows", "_hash")

    def __init__(self, rows):
        rows = tuple(tuple(Fraction(x) for x in r) for r in rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("matrix must be square")
        self.n = n
        self.rows = rows
        self._hash = hash((n, rows))

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, RationalMatrix) and self.rows == other.rows

    def __repr__(self):
        return f"RationalMatrix({[[str(x) for x in r] for r in self.rows]})"

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        n = self.n
        a, b = self.rows, other.rows
        return RationalMatrix(
            [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        )

    def denominator_support(self):
        """Set of primes dividing any entry's denominator."""
        out = set()
        for r in self.rows:
            for x in r:
                if x.denominator != 1:
                    out |= _small_prime_factors(x.denominator)
        return out

    def det(self) -> Fraction:
        n = self.n
        a = [list(r) for r in self.rows]
        sign = Fraction(1)
        for col in range(n):
            piv = next((i for i in range(col, n) if a[i][col] != 0), None)
            if piv is None:
                return Fraction(0)
            if piv != col:
                a[col], a[piv] = a[piv], a[col]
                sign = -sign
            for i in range(col + 1, n):
                f = a[i][col] / a[col][col]
                if f:
                    for j in range(col, n):
                        a[i][j] -= f * a[col][j]
        prod = sign
        for i in range(n):
            prod *= a[i][i]
        return prod

    def inverse(self) -> "RationalMatrix":
        n = self.n
        a = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(self.rows)]
        for col in range(n):
            piv = next((i for i in range(col, n) if a[i][col] != 0), None)
            if piv is None:
                raise SingularMatrix("rational matrix is singular")
            a[col], a[piv] = a[piv], a[col]
            d = a[col][col]
            a[col] = [x / d for x in a[col]]
            for i in range(n):
                if i != col and a[i][col]:
                    f = a[i][col]
                    a[i] = [x - f * y for x, y in zip(a[i], a[col])]
        return RationalMatrix([r[n:] for r in a])


class ResidueMatrix:
    """Square matrix over ℤ/m with a canonical byte encoding."""

    __slots__ = ("n", "m", "rows", "_hash")

    def __init__(self, rows, m: int):
        if m < 1:
            raise BadModulus(f"modulus must be positive, got {m}")
        rows = tuple(tuple(int(x) % m for x in r) for r in rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("matrix must be square")
        self.n = n
        self.m = m
        self.rows = rows
        self._hash = hash((n, m, rows))

    @classmethod
    def identity(cls, n: int, m: int) -> "ResidueMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], m)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return (
            isinstance(other, ResidueMatrix)
            and self.m == other.m
            and self.rows == other.rows
        )

    def __repr__(self):
        return f"ResidueMatrix({[list(r) for r in self.rows]}, m={self.m})"

    def is_identity(self) -> bool:
        return all(
            x == (1 if i == j else 0) for i, r in enumerate(self.rows) for j, x in enumerate(r)
        )

    def __matmul__(self, other: "ResidueMatrix") -> "ResidueMatrix":
        if self.m != other.m:
            raise BadModulus("modulus mismatch in product")
        n = self.n
        a, b, m = self.rows, other.rows, self.m
        return ResidueMatrix(
            [[sum(a[i][k] * b[k][j] for k in range(n)) % m for j in range(n)] for i in range(n)],
            m,
        )

    def __pow__(self, e: int) -> "ResidueMatrix":
        if e < 0:
            return invert_mod(self) ** (-e)
        out = ResidueMatrix.identity(self.n, self.m)
        base = self
        while e:
            if e & 1:
                out = out @ base
            base = base @ base
            e >>= 1
        return out

    def encode(self) -> bytes:
        """Canonical encoding: row-major, fixed-width big-endian entries."""
        w = encode_width(self.m)
        return b"".join(x.to_bytes(w, "big") for r in self.rows for x in r)

    @classmethod
    def decode(cls, data: bytes, n: int, m: int) -> "ResidueMatrix":
        w = encode_width(m)
        if len(data) != n * n * w:
            raise ValueError("encoded length does not match shape")
        vals = [int.from_bytes(data[i * w : (i + 1) * w], "big") for i in range(n * n)]
        return cls([vals[i * n : (i + 1) * n] for i in range(n)], m)

    def to_rows(self):
        return [list(r) for r in self.rows]


def reduce_mod(g: RationalMatrix, m: int) -> ResidueMatrix:
    """Reduce a rational matrix mod m.

    Each entry a/b maps to a * b^{-1} mod m; a denominator sharing a factor
    with m has no image and raises NonInvertibleDenominator.
    """
    if m < 2:
        raise BadModulus(f"modulus must be at least 2, got {m}")
    out = []
    for r in g.rows:
        row = []
        for x in r:
            b = x.denominator
            if b != 1 and math.gcd(b, m) != 1:
                raise NonInvertibleDenominator(
                    f"denominator {b} shares a factor with modulus {m}"
                )
            row.append((x.numerator * pow(b, -1, m)) % m if b != 1 else x.numerator % m)
        out.append(row)
    return ResidueMatrix(out, m)


def _int_det_bareiss(a) -> int:
    """Fraction-free Bareiss determinant of an integer matrix."""
    n = len(a)
    a = [list(map(int, r)) for r in a]
    sign = 1
    prev = 1
    for col in range(n - 1):
        piv = next((i for i in range(col, n) if a[i][col] != 0), None)
        if piv is None:
            return 0
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            sign = -sign
        for i in range(col + 1, n):
            for j in range(col + 1, n):
                a[i][j] = (a[i][j] * a[col][col] - a[i][col] * a[col][j]) // prev
            a[i][col] = 0
        prev = a[col][col]
    return sign * a[n - 1][n - 1]


def _adjugate_small(rows, n):
    """Direct cofactor adjugate for n <= 4 (integer arithmetic)."""

    def strike(mat, r, c):
        return [[mat[i][j] for j in range(len(mat)) if j != c] for i in range(len(mat)) if i != r]

    def det(mat):
        k = len(mat)
        if k == 1:
            return mat[0][0]
        if k == 2:
            return mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
        return sum((-1) ** c * mat[0][c] * det(strike(mat, 0, c)) for c in range(k))

    return [[(-1) ** (i + j) * det(strike(rows, j, i)) for j in range(n)] for i in range(n)]


def invert_mod(g: ResidueMatrix) -> ResidueMatrix:
    """Inverse mod m via adjugate; SingularMatrix when det is not a unit."""
    n, m = g.n, g.m
    lifted = [list(r) for r in g.rows]
    d = _int_det_bareiss(lifted) if n > 1 else lifted[0][0]
    dm = d % m
    if math.gcd(dm, m) != 1:
        raise SingularMatrix(f"determinant {dm} shares a factor with modulus {m}")
    dinv = pow(dm, -1, m)
    if n <= 4:
        adj = _adjugate_small(lifted, n)
    else:
        # adjugate = det * inverse over Q; exact because det is known nonzero
        inv = RationalMatrix(lifted).inverse()
        adj = [[x * d for x in r] for r in inv.rows]
        assert all(x.denominator == 1 for r in adj for x in r)
        adj = [[int(x) for x in r] for r in adj]
    return ResidueMatrix([[(x * dinv) % m for x in r] for r in adj], m)


class PadicTruncMatrix:
    """Square matrix over ℤ/p^N with valuations saturated at N."""

    __slots__ = ("n", "p", "N", "q", "rows", "_hash")

    def __init__(self, rows, p: int, N: int):
        if N < 1:
            raise ValueError("precision N must be >= 1")
        q = p**N
        rows = tuple(tuple(int(x) % q for x in r) for r in rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("matrix must be square")
        self.n = n
        self.p = p
        self.N = N
        self.q = q
        self.rows = rows
        self._hash = hash((n, p, N, rows))

    @classmethod
    def identity(cls, n: int, p: int, N: int) -> "PadicTruncMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], p, N)

    @classmethod
    def zero(cls, n: int, p: int, N: int) -> "PadicTruncMatrix":
        return cls([[0] * n for _ in range(n)], p, N)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return (
            isinstance(other, PadicTruncMatrix)
            and (self.p, self.N) == (other.p, other.N)
            and self.rows == other.rows
        )

    def __repr__(self):
        return f"PadicTruncMatrix({[list(r) for r in self.rows]}, p={self.p}, N={self.N})"

    def _wrap(self, rows):
        return PadicTruncMatrix(rows, self.p, self.N)

    def __add__(self, other):
        return self._wrap(
            [[x + y for x, y in zip(r, s)] for r, s in zip(self.rows, other.rows)]
        )

    def __sub__(self, other):
        return self._wrap(
            [[x - y for x, y in zip(r, s)] for r, s in zip(self.rows, other.rows)]
        )

    def __neg__(self):
        return self._wrap([[-x for x in r] for r in self.rows])

    def __matmul__(self, other):
        n, q = self.n, self.q
        a, b = self.rows, other.rows
        return self._wrap(
            [[sum(a[i][k] * b[k][j] for k in range(n)) % q for j in range(n)] for i in range(n)]
        )

    def scale(self, c: int) -> "PadicTruncMatrix":
        return self._wrap([[x * c for x in r] for r in self.rows])

    def __pow__(self, e: int) -> "PadicTruncMatrix":
        if e < 0:
            raise ValueError("negative powers not supported here")
        out = PadicTruncMatrix.identity(self.n, self.p, self.N)
        base = self
        while e:
            if e & 1:
                out = out @ base
            base = base @ base
            e >>= 1
        return out

    def valuation(self) -> int:
        """min over entries of v_p(entry), saturated at N."""
        from .modring import vp

        v = self.N
        for r in self.rows:
            for x in r:
                if x:
                    v = min(v, vp(x, self.p, self.N))
                    if v == 0:
                        return 0
        return v

    def norm(self) -> float:
        """p-adic operator norm p^(-valuation); 0.0 when saturated."""
        v = self.valuation()
        return 0.0 if v >= self.N else float(self.p) ** (-v)

    def div_exact_pow(self, k: int) -> "PadicTruncMatrix":
        """Divide by p^k exactly; precision honestly drops to N - k."""
        if k == 0:
            return self
        pk = self.p**k
        if self.N - k < 1:
            raise ValueError("division would consume all precision")
        if any(x % pk for r in self.rows for x in r):
            raise ValueError("entries not divisible by p^k")
        return PadicTruncMatrix(
            [[x // pk for x in r] for r in self.rows], self.p, self.N - k
        )

    def reduce_to(self, N2: int) -> "PadicTruncMatrix":
        if N2 > self.N:
            raise ValueError("cannot gain precision")
        return PadicTruncMatrix(self.rows, self.p, N2)

    def lift_to(self, N2: int) -> "PadicTruncMatrix":
        """Reinterpret entries at higher precision.

        Any lift represents the same residue mod p^N; callers must only rely
        on the result mod p^N.  The chart series use this for guard digits.
        """
        if N2 < self.N:
            raise ValueError("use reduce_to to lower precision")
        return PadicTruncMatrix(self.rows, self.p, N2)

    def flat(self):
        """Row-major entry tuple (length n^2)."""
        return tuple(x for r in self.rows for x in r)

    def to_residue(self) -> ResidueMatrix:
        return ResidueMatrix(self.rows, self.q)

    @classmethod
    def from_residue(cls, g: ResidueMatrix, p: int, N: int) -> "PadicTruncMatrix":
        if g.m != p**N:
            raise BadModulus(f"residue modulus {g.m} is not {p}^{N}")
        return cls(g.rows, p, N)
