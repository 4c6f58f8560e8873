"""Exact integer-lattice linear algebra.

Matrices are tuples of tuples of Python ints (arbitrary precision), rows
first.  Everything here is a pure function over immutable values; no
floating point is used anywhere.

Conventions:
  * vectors are rows; a linear map given by matrix ``A`` acts as ``v @ A``,
  * ``smith_normal_form(A)`` returns ``U, D, V`` with ``U @ A @ V == D``,
  * ``hermite_normal_form(A)`` returns row-style ``H, U`` with ``U @ A == H``
    (echelon, positive pivots, entries above a pivot reduced into
    ``[0, pivot)``),
  * ``kernel_lattice(A)`` is the saturated lattice ``{x : A x^T = 0}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .errors import GeometryError

Matrix = tuple[tuple[int, ...], ...]
Vector = tuple[int, ...]


def mat(rows) -> Matrix:
    return tuple(tuple(int(x) for x in row) for row in rows)


def identity(n: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def zeros(r: int, c: int) -> Matrix:
    return tuple((0,) * c for _ in range(r))


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a)) if a else ()


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def vec_mat(v, a: Matrix):
    return tuple(sum(x * y for x, y in zip(v, col)) for col in zip(*a))


def dot(u, v):
    return sum(x * y for x, y in zip(u, v))


def vec_add(u: Vector, v: Vector) -> Vector:
    return tuple(x + y for x, y in zip(u, v))


def vec_sub(u: Vector, v: Vector) -> Vector:
    return tuple(x - y for x, y in zip(u, v))


def vec_neg(u: Vector) -> Vector:
    return tuple(-x for x in u)


def vec_scale(c, u):
    return tuple(c * x for x in u)


def content(v) -> int:
    g = 0
    for x in v:
        g = gcd(g, abs(x))
    return g


def primitive(v: Vector) -> Vector:
    """Divide an integer vector by the gcd of its entries (error on zero)."""
    g = content(v)
    if g == 0:
        raise GeometryError("zero vector has no primitive representative")
    return tuple(x // g for x in v)


def det(a: Matrix) -> int:
    """Exact determinant by fraction-free Bareiss elimination."""
    n = len(a)
    if n == 0:
        return 1
    if any(len(row) != n for row in a):
        raise GeometryError("determinant requires a square matrix")
    m = [list(row) for row in a]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[-1][-1]


def _row_op(m, i, j, q):
    # row_i += q * row_j
    m[i] = [a + q * b for a, b in zip(m[i], m[j])]


def _col_op(m, i, j, q):
    # col_i += q * col_j
    for row in m:
        row[i] += q * row[j]


@dataclass(frozen=True)
class SmithDecomposition:
    """U @ A @ V == D with D diagonal, nonnegative, d_i | d_{i+1}."""

    u: Matrix
    d: Matrix
    v: Matrix

    @property
    def invariant_factors(self) -> tuple[int, ...]:
        k = min(len(self.d), len(self.d[0]) if self.d else 0)
        facs = tuple(self.d[i][i] for i in range(k))
        return tuple(f for f in facs if f != 0)


def smith_normal_form(a: Matrix) -> SmithDecomposition:
    """Smith normal form with both transforms, over the integers.

    The diagonal is canonical (nonnegative, divisibility-sorted); U and V
    are unimodular but not unique.
    """
    a = mat(a)
    r = len(a)
    if r == 0 or len(a[0]) == 0:
        raise GeometryError("smith_normal_form requires a nonempty matrix")
    c = len(a[0])
    m = [list(row) for row in a]
    u = [list(row) for row in identity(r)]
    v = [list(row) for row in identity(c)]
    t = 0
    while t < min(r, c):
        # pick the nonzero entry of least magnitude in the trailing block
        piv = None
        best = None
        for i in range(t, r):
            for j in range(t, c):
                x = m[i][j]
                if x != 0 and (best is None or abs(x) < best):
                    best = abs(x)
                    piv = (i, j)
        if piv is None:
            break
        pi, pj = piv
        if pi != t:
            m[t], m[pi] = m[pi], m[t]
            u[t], u[pi] = u[pi], u[t]
        if pj != t:
            for row in m:
                row[t], row[pj] = row[pj], row[t]
            for row in v:
                row[t], row[pj] = row[pj], row[t]
        if m[t][t] < 0:
            m[t] = [-x for x in m[t]]
            u[t] = [-x for x in u[t]]
        clean = True
        for i in range(t + 1, r):
            q = m[i][t] // m[t][t]
            if q:
                _row_op(m, i, t, -q)
                _row_op(u, i, t, -q)
            if m[i][t]:
                clean = False
        for j in range(t + 1, c):
            q = m[t][j] // m[t][t]
            if q:
                _col_op(m, j, t, -q)
                _col_op(v, j, t, -q)
            if m[t][j]:
                clean = False
        if not clean:
            continue
        # force the pivot to divide the rest of the block
        viol = None
        for i in range(t + 1, r):
            for j in range(t + 1, c):
                if m[i][j] % m[t][t]:
                    viol = i
                    break
            if viol is not None:
                break
        if viol is not None:
            _row_op(m, t, viol, 1)
            _row_op(u, t, viol, 1)
            continue
        t += 1
    return SmithDecomposition(mat(u), mat(m), mat(v))


def hermite_normal_form(a: Matrix) -> tuple[Matrix, Matrix]:
    """Row-style Hermite normal form: returns (H, U) with U @ A == H."""
    a = mat(a)
    r = len(a)
    if r == 0 or len(a[0]) == 0:
        raise GeometryError("hermite_normal_form requires a nonempty matrix")
    c = len(a[0])
    m = [list(row) for row in a]
    u = [list(row) for row in identity(r)]
    pr = 0
    for col in range(c):
        if pr >= r:
            break
        rows = [i for i in range(pr, r) if m[i][col] != 0]
        if not rows:
            continue
        while len(rows) > 1:
            rows.sort(key=lambda i: abs(m[i][col]))
            i0 = rows[0]
            for i in rows[1:]:
                q = m[i][col] // m[i0][col]
                _row_op(m, i, i0, -q)
                _row_op(u, i, i0, -q)
            rows = [i for i in rows if m[i][col] != 0]
        i0 = rows[0]
        if i0 != pr:
            m[pr], m[i0] = m[i0], m[pr]
            u[pr], u[i0] = u[i0], u[pr]
        if m[pr][col] < 0:
            m[pr] = [-x for x in m[pr]]
            u[pr] = [-x for x in u[pr]]
        for i in range(pr):
            q = m[i][col] // m[pr][col]
            if q:
                _row_op(m, i, pr, -q)
                _row_op(u, i, pr, -q)
        pr += 1
    return mat(m), mat(u)


def rank(a: Matrix) -> int:
    if not a or not a[0]:
        return 0
    h, _ = hermite_normal_form(a)
    return sum(1 for row in h if any(row))


def rational_inverse(a: Matrix) -> tuple[tuple[Fraction, ...], ...]:
    """Inverse over Q by exact Gaussian elimination."""
    n = len(a)
    if n == 0:
        return ()
    m = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(a)]
    for col in range(n):
        piv = next((i for i in range(col, n) if m[i][col] != 0), None)
        if piv is None:
            raise GeometryError("matrix is singular")
        m[col], m[piv] = m[piv], m[col]
        inv = m[col][col]
        m[col] = [x / inv for x in m[col]]
        for i in range(n):
            if i != col and m[i][col]:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[col])]
    return tuple(tuple(row[n:]) for row in m)


def int_inverse(a: Matrix) -> Matrix:
    """Inverse of a unimodular integer matrix, as an integer matrix."""
    inv = rational_inverse(a)
    out = []
    for row in inv:
        if any(x.denominator != 1 for x in row):
            raise GeometryError("matrix is not unimodular")
        out.append(tuple(int(x) for x in row))
    return tuple(out)


def is_unimodular(a: Matrix) -> bool:
    return len(a) == len(a[0]) and abs(det(a)) == 1


def solve_left(b: Matrix, v) -> tuple[Fraction, ...]:
    """Solve x @ B = v for x over Q; B must have independent rows."""
    k = len(b)
    if k == 0:
        if any(x != 0 for x in v):
            raise GeometryError("inconsistent system")
        return ()
    # Gaussian elimination on the transposed system B^T x^T = v^T.
    cols = len(b[0])
    m = [[Fraction(b[i][j]) for i in range(k)] + [Fraction(v[j])] for j in range(cols)]
    pr = 0
    for col in range(k):
        piv = next((i for i in range(pr, cols) if m[i][col] != 0), None)
        if piv is None:
            raise GeometryError("rows of B are dependent")
        m[pr], m[piv] = m[piv], m[pr]
        inv = m[pr][col]
        m[pr] = [x / inv for x in m[pr]]
        for i in range(cols):
            if i != pr and m[i][col]:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[pr])]
        pr += 1
    for i in range(pr, cols):
        if m[i][k] != 0:
            raise GeometryError("inconsistent system")
    return tuple(m[i][k] for i in range(k))


def solve_left_int(b: Matrix, v) -> Vector:
    x = solve_left(b, v)
    if any(f.denominator != 1 for f in x):
        raise GeometryError("system has no integral solution")
    return tuple(int(f) for f in x)


def kernel_lattice(a: Matrix, cols: int | None = None) -> Matrix:
    """Canonical (HNF) basis of the saturated lattice {x : row . x = 0 for all rows}.

    ``cols`` must be given when ``a`` is empty.
    """
    if not a:
        if cols is None:
            raise GeometryError("kernel_lattice of an empty matrix needs the ambient rank")
        return identity(cols)
    c = len(a[0])
    snf = smith_normal_form(a)
    r = len(snf.invariant_factors)
    basis = [tuple(snf.v[i][j] for i in range(c)) for j in range(r, c)]
    if not basis:
        return ()
    h, _ = hermite_normal_form(tuple(basis))
    return tuple(row for row in h if any(row))


def saturation(a: Matrix, cols: int | None = None) -> Matrix:
    """Canonical basis of the saturation of the row lattice of ``a``."""
    if not a:
        return ()
    c = len(a[0])
    k = kernel_lattice(a, c)
    if not k:
        return identity(c)
    return kernel_lattice(k, c)


def complete_to_basis(b: Matrix, cols: int) -> Matrix:
    """Extend the rows of a saturated lattice basis ``b`` to a basis of Z^cols.

    Returns a unimodular matrix whose first ``len(b)`` rows are exactly ``b``.
    """
    if not b:
        return identity(cols)
    snf = smith_normal_form(b)
    if snf.invariant_factors != (1,) * len(b):
        raise GeometryError("rows are not a basis of a saturated lattice")
    vinv = int_inverse(snf.v)
    rest = vinv[len(b):]
    f = tuple(b) + tuple(rest)
    if not is_unimodular(f):
        raise GeometryError("basis completion failed")
    return f


def section_for_sublattice(b: Matrix, cols: int) -> Matrix:
    """Integer matrix C with B @ C^T = I, for a saturated lattice basis B.

    Gives a splitting of the restriction map Z^cols -> Hom(B, Z): the row
    vector ``y @ C`` pairs with the i-th row of B to ``y_i``.
    """
    k = len(b)
    snf = smith_normal_form(b)
    if snf.invariant_factors != (1,) * k:
        raise GeometryError("rows are not a basis of a saturated lattice")
    stacked = tuple(snf.u[i] if i < k else (0,) * k for i in range(cols))
    return transpose(mat_mul(snf.v, stacked))


@dataclass(frozen=True)
class QuotientBasis:
    """Coordinates on Z^rank / L for a saturated lattice L (rows of ``lattice``).

    ``project`` maps a vector to its quotient coordinates; ``section`` lifts
    quotient coordinates to the canonical representative; ``reduce`` maps a
    vector to the canonical representative of its coset.
    """

    lattice: Matrix
    rank: int
    _basis: Matrix
    _basis_inv: Matrix

    def project(self, v) -> Vector:
        c = vec_mat(v, self._basis_inv)
        return tuple(c[len(self.lattice):])

    def section(self, q) -> Vector:
        rows = self._basis[len(self.lattice):]
        out = (0,) * self.rank
        for coef, row in zip(q, rows):
            out = vec_add(out, vec_scale(coef, row))
        return out

    def reduce(self, v) -> Vector:
        return self.section(self.project(v))


def quotient_basis(lattice: Matrix, rank_: int) -> QuotientBasis:
    lat = saturation(lattice, rank_) if lattice else ()
    f = complete_to_basis(lat, rank_)
    return QuotientBasis(lat, rank_, f, int_inverse(f))


def coset_reduce(hnf_rows: Matrix, v) -> Vector:
    """Canonical representative of v modulo the lattice spanned by HNF rows.

    Works for non-saturated lattices (pivot entries may exceed 1)."""
    v = tuple(int(x) for x in v)
    for row in hnf_rows:
        p = next(i for i, x in enumerate(row) if x)
        q = v[p] // row[p]
        if q:
            v = vec_sub(v, vec_scale(q, row))
    return v


def projected_lattice(rows: Matrix, keep: int) -> Matrix:
    """HNF basis of the image of the row lattice under projection to the
    first ``keep`` coordinates."""
    proj = tuple(row[:keep] for row in rows)
    proj = tuple(row for row in proj if any(row))
    if not proj:
        return ()
    h, _ = hermite_normal_form(proj)
    return tuple(row for row in h if any(row))
