"""Linear algebra over ℤ/p^N with valuation-aware pivoting.

Row spans over the local ring ℤ/p^N need two related normal forms: a
Howell-style echelon basis for membership tests and span comparison, and a
Smith reduction for rank and elementary divisors.  Over a ring with a single
prime both are short, because an entry of minimal valuation divides every
other entry, so one elimination pass per pivot suffices and no gcd steps
appear.

All routines work on plain Python ints (lists of rows); the matrices involved
are tiny (dozens of rows, n^2 columns) and exactness matters more than speed.
"""

from __future__ import annotations


def vp(x: int, p: int, cap: int) -> int:
    """Valuation of x at p, saturated at cap (v(0) reports cap)."""
    x = int(x)
    if x == 0:
        return cap
    v = 0
    while x % p == 0 and v < cap:
        x //= p
        v += 1
    return v


def vp_min(row, p: int, cap: int) -> int:
    v = cap
    for x in row:
        if x:
            v = min(v, vp(x, p, cap))
            if v == 0:
                break
    return v


def _normalize_row(row, pivot_col, e, p, q):
    """Scale row by the unit inverse so the pivot entry becomes exactly p^e."""
    u = row[pivot_col] // p**e
    uinv = pow(u, -1, q)
    return [(x * uinv) % q for x in row]


def howell_form(rows, p: int, N: int):
    """Canonical Howell basis of the row span of ``rows`` over ℤ/p^N.

    Returns (basis_rows, pivots) where pivots is a list of (column, exponent)
    pairs aligned with basis_rows.  The basis characterizes the span exactly:
    two row sets generate the same submodule iff their forms are identical.
    """
    q = p**N
    work = [[int(x) % q for x in r] for r in rows]
    work = [r for r in work if any(r)]
    ncols = len(rows[0]) if rows else 0
    result = []
    pivots = []
    for col in range(ncols):
        best = None
        best_v = N
        for idx, r in enumerate(work):
            if r[col] == 0:
                continue
            v = vp(r[col], p, N)
            if v < best_v:
                best_v, best = v, idx
        if best is None:
            continue
        piv = work.pop(best)
        e = best_v
        piv = _normalize_row(piv, col, e, p, q)
        pe = p**e
        for r in work:
            if r[col]:
                t = r[col] // pe  # exact: pivot has minimal valuation in col
                for j in range(col, ncols):
                    r[j] = (r[j] - t * piv[j]) % q
        if e > 0:
            # shadow row keeps the span's deeper tail visible to later columns
            shadow = [(p ** (N - e) * x) % q for x in piv]
            if any(shadow):
                work.append(shadow)
        work = [r for r in work if any(r)]
        result.append(piv)
        pivots.append((col, e))
    # reduce entries sitting over later pivots so the form is unique
    for i in range(len(result)):
        for j in range(i + 1, len(result)):
            cj, ej = pivots[j]
            t = result[i][cj] // p**ej
            if t:
                for k in range(len(result[i])):
                    result[i][k] = (result[i][k] - t * result[j][k]) % q
    return result, pivots


def howell_contains(basis, pivots, vec, p: int, N: int) -> bool:
    """Membership of vec in the span described by a Howell basis."""
    q = p**N
    v = [int(x) % q for x in vec]
    for row, (col, e) in zip(basis, pivots):
        if v[col]:
            if v[col] % p**e:
                return False
            t = v[col] // p**e
            for j in range(col, len(v)):
                v[j] = (v[j] - t * row[j]) % q
    return not any(v)


def smith_exponents(rows, p: int, N: int):
    """Exponents of the nonzero invariant factors of the row module.

    Classic Smith reduction specialises nicely over ℤ/p^N: pick the global
    minimum-valuation entry, clear its row and column in one pass, recurse.
    Returned exponents are nondecreasing and all < N.
    """
    q = p**N
    a = [[int(x) % q for x in r] for r in rows]
    nr = len(a)
    nc = len(a[0]) if nr else 0
    top = 0
    exps = []
    while True:
        bi = bj = -1
        bv = N
        for i in range(top, nr):
            for j in range(nc):
                x = a[i][j]
                if x:
                    v = vp(x, p, N)
                    if v < bv:
                        bv, bi, bj = v, i, j
                        if v == 0:
                            break
            if bv == 0:
                break
        if bi < 0:
            break
        a[top], a[bi] = a[bi], a[top]
        row = _normalize_row(a[top], bj, bv, p, q)
        a[top] = row
        pe = p**bv
        for i in range(top + 1, nr):
            x = a[i][bj]
            if x:
                t = x // pe
                a[i] = [(y - t * z) % q for y, z in zip(a[i], row)]
        # column elimination is implicit: remaining rows are zero at bj now,
        # and the pivot row never re-enters the submatrix
        for i in range(top + 1, nr):
            a[i][bj] = 0
        exps.append(bv)
        top += 1
    return exps


def elementary_divisors(rows, p: int, N: int):
    return tuple(p**e for e in smith_exponents(rows, p, N))


def minor_norm(rows, p: int, N: int, d: int):
    """Largest p-adic absolute value over d x d minors, as (exponent, value).

    The minimal minor valuation equals the sum of the d smallest invariant
    factor exponents, so no explicit minor enumeration happens.  Returns
    (None, 0.0) when the matrix has fewer than d invariant factors below
    precision, i.e. every d x d minor vanishes mod p^N.
    """
    exps = smith_exponents(rows, p, N)
    if len(exps) < d:
        return None, 0.0
    s = sum(sorted(exps)[:d])
    if s >= N:
        # the product of invariant factors already exceeds the precision,
        # so every d x d minor is 0 mod p^N and the exponent is unknowable
        return None, 0.0
    return s, float(p) ** (-s)


def rref_mod_p(rows, p: int):
    """Reduced row echelon form mod prime p; returns (basis_rows, pivot_cols)."""
    work = [[int(x) % p for x in r] for r in rows]
    work = [r for r in work if any(r)]
    ncols = len(rows[0]) if rows else 0
    basis = []
    pivcols = []
    for col in range(ncols):
        src = None
        for idx, r in enumerate(work):
            if r[col] % p:
                src = idx
                break
        if src is None:
            continue
        piv = work.pop(src)
        inv = pow(piv[col], -1, p)
        piv = [(x * inv) % p for x in piv]
        for r in work:
            t = r[col]
            if t:
                for j in range(col, ncols):
                    r[j] = (r[j] - t * piv[j]) % p
        for r in basis:
            t = r[col]
            if t:
                for j in range(ncols):
                    r[j] = (r[j] - t * piv[j]) % p
        work = [r for r in work if any(r)]
        basis.append(piv)
        pivcols.append(col)
    return basis, pivcols


def in_span_mod_p(basis, pivcols, vec, p: int) -> bool:
    v = [int(x) % p for x in vec]
    for row, col in zip(basis, pivcols):
        t = v[col]
        if t:
            for j in range(len(v)):
                v[j] = (v[j] - t * row[j]) % p
    return not any(v)
