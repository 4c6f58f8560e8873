"""Deterministic resolution of toric singularities by fan subdivision.

Strategy: triangulate (pulling at the lex-smallest ray), then repeatedly
pick the lexicographically first cone of maximal multiplicity and
star-subdivide at the nonzero point of its half-open fundamental
parallelepiped that minimizes (sum of barycentric coordinates, then the
barycentric tuple lexicographically, rays in canonical order).  Every
subdivision strictly decreases the multiset of multiplicities, so the loop
terminates with all cones smooth.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

from .errors import CapacityError, GeometryError
from .cones import (
    Cone,
    Fan,
    fan_validate,
    is_simplicial,
    parallelepiped_points,
    pull_triangulate,
    span_basis,
    span_dim,
)
from .lattice import (
    Vector,
    det,
    int_inverse,
    is_unimodular,
    mat,
    rational_inverse,
    solve_left_int,
    vec_mat,
    vec_scale,
    vec_sub,
)

MAX_RESOLUTION_STEPS = 1_000_000


@dataclass(frozen=True)
class ResolutionStep:
    cone: tuple[Vector, ...]
    point: Vector
    multiplicity_before: int
    replaced: tuple[tuple[tuple[Vector, ...], int, int], ...]
    """Per affected cone: (rays, multiplicity before, -> see pieces)."""
    pieces: tuple[tuple[tuple[Vector, ...], int], ...]


@dataclass(frozen=True)
class ResolutionTrace:
    steps: tuple[ResolutionStep, ...]

    def __len__(self) -> int:
        return len(self.steps)


class _Simplex:
    """Exact barycentric bookkeeping for one simplicial cone."""

    __slots__ = ("cone", "rays", "basis", "coords", "adj", "absdet")

    def __init__(self, cone: Cone):
        self.cone = cone
        self.rays = cone.rays
        k = len(cone.rays)
        if cone.rank == k:
            self.basis = None
            self.coords = cone.rays
        else:
            self.basis = span_basis(cone)
            self.coords = tuple(solve_left_int(self.basis, r) for r in cone.rays)
        d = det(self.coords)
        if d == 0:
            raise GeometryError("cone is not simplicial")
        inv = rational_inverse(self.coords)
        adj = tuple(tuple(int(x * d) for x in row) for row in inv)
        if d < 0:
            adj = tuple(tuple(-x for x in row) for row in adj)
            d = -d
        self.adj = adj
        self.absdet = d

    def barycentric_numerators(self, v) -> Vector | None:
        """Numerators of the barycentric coordinates of v over absdet, or
        None when v is not in the span lattice."""
        if self.basis is None:
            x = v
        else:
            try:
                x = solve_left_int(self.basis, v)
            except GeometryError:
                return None
        return vec_mat(x, self.adj)

    def contains(self, v) -> bool:
        nums = self.barycentric_numerators(v)
        return nums is not None and all(n >= 0 for n in nums)

    def subdivide(self, v) -> list[Cone]:
        nums = self.barycentric_numerators(v)
        out = []
        for i, n in enumerate(nums):
            if n > 0:
                rays = tuple(sorted(self.rays[:i] + self.rays[i + 1:] + (v,)))
                out.append(Cone(self.cone.rank, rays))
        return out

    def best_parallelepiped_point(self) -> Vector:
        """The nonzero parallelepiped lattice point minimizing the sum of
        barycentric coordinates, ties broken lexicographically on the
        barycentric tuple in canonical ray order."""
        best_key = None
        best = None
        for x, nums, _ in parallelepiped_points(self.coords):
            if not any(nums):
                continue
            key = (sum(nums), nums)
            if best_key is None or key < best_key:
                best_key = key
                best = x
        if best is None:
            raise GeometryError("smooth cone has no interior parallelepiped point")
        if self.basis is not None:
            best = vec_mat(best, self.basis)
        g = gcd(*(abs(c) for c in best))
        if g != 1:
            raise GeometryError("internal: subdivision point is not primitive")
        return best


def make_simplicial(fan: Fan) -> Fan:
    """Triangulate every maximal cone with the shared pulling rule; support
    and ray set are unchanged."""
    diags = fan_validate(fan)
    if diags:
        raise GeometryError("invalid fan: " + "; ".join(diags))
    out = []
    for c in fan.cones:
        out.extend(pull_triangulate(c))
    return Fan.make(out, fan.rank)


def resolve(fan: Fan) -> tuple[Fan, ResolutionTrace]:
    """Subdivide until every maximal cone is smooth (multiplicity 1)."""
    simp = make_simplicial(fan)
    ctxs = {c: _Simplex(c) for c in simp.cones}
    mults = {c: ctxs[c].absdet for c in simp.cones}
    steps = []
    for _ in range(MAX_RESOLUTION_STEPS):
        worst = max(mults.values())
        if worst == 1:
            break
        target = min((c for c, m in mults.items() if m == worst),
                     key=lambda c: c.key())
        v = ctxs[target].best_parallelepiped_point()
        replaced = []
        pieces = []
        new_mults = dict(mults)
        for c in list(new_mults):
            ctx = ctxs[c]
            if not ctx.contains(v):
                continue
            replaced.append((c.rays, mults[c], 0))
            del new_mults[c]
            for piece in ctx.subdivide(v):
                if piece not in ctxs:
                    ctxs[piece] = _Simplex(piece)
                new_mults[piece] = ctxs[piece].absdet
                pieces.append((piece.rays, new_mults[piece]))
        steps.append(ResolutionStep(
            cone=target.rays,
            point=v,
            multiplicity_before=worst,
            replaced=tuple(replaced),
            pieces=tuple(sorted(set(pieces))),
        ))
        mults = new_mults
    else:
        raise CapacityError("resolution exceeded the step bound")
    return Fan.make(list(mults), fan.rank), ResolutionTrace(tuple(steps))


# ---------------------------------------------------------------------------
# Hirzebruch-Jung: the independent 2D oracle


def hj_continued_fraction(n: int, q: int) -> tuple[int, ...]:
    """Expansion n/q = a1 - 1/(a2 - 1/(...)) with all a_i >= 2."""
    out = []
    while q > 0:
        a = -(-n // q)
        out.append(a)
        n, q = q, a * q - n
    return tuple(out)


def hj_resolution(n: int, q: int) -> tuple[Vector, ...]:
    """Rays inserted by the minimal smooth subdivision of the cyclic
    quotient cone of type (n, q), in boundary order.

    Convention: type (n, q) with 0 < q < n, gcd(n, q) = 1 is the cone
    Cone(e2, n*e1 - q*e2); the inserted rays are u_1 = (1, 0), ...,
    u_{i+1} = a_i * u_i - u_{i-1} running over the expansion of n/q, so
    their count is the length of that expansion.  (The type (n, q) chart is
    the A_{n-1} singularity exactly when q = n - 1.)
    """
    n = int(n)
    q = int(q)
    if n < 1:
        raise GeometryError("type requires n >= 1")
    if n == 1:
        if q != 0:
            raise GeometryError("the smooth type is (1, 0)")
        return ()
    if not (0 < q < n) or gcd(n, q) != 1:
        raise GeometryError("type requires 0 < q < n with gcd(n, q) = 1")
    prev = (0, 1)
    cur = (1, 0)
    out = []
    for a in hj_continued_fraction(n, q):
        out.append(cur)
        prev, cur = cur, vec_sub(vec_scale(a, cur), prev)
    if cur != (n, -q):
        raise GeometryError("internal: continued fraction did not close up")
    return tuple(out)


def cyclic_type_cone(n: int, q: int) -> Cone:
    """The normal-form cone Cone(e2, n*e1 - q*e2) of type (n, q)."""
    if n == 1:
        return Cone.make([(0, 1), (1, 0)], 2)
    return Cone.make([(0, 1), (n, -q)], 2)


def _ext_gcd(a: int, b: int) -> tuple[int, int]:
    """(x, y) with a*x + b*y = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        qq = old_r // r
        old_r, r = r, old_r - qq * r
        old_s, s = s, old_s - qq * s
        old_t, t = t, old_t - qq * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return old_s, old_t


def _mat2(a, b):
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2))
                 for i in range(2))


def classify_cyclic_type(cone: Cone) -> tuple[int, int, tuple]:
    """Normal form of a full-dimensional 2D strongly convex cone.

    Returns (n, q, t) where v -> v @ t is unimodular and maps the cone onto
    the type (n, q) cone Cone(e2, n*e1 - q*e2).  The chart determines q
    only up to inversion mod n; the smaller of q, q^(-1) mod n is chosen.
    """
    if cone.rank != 2 or len(cone.rays) != 2 or cone.lines:
        raise GeometryError("type classification needs a full 2D cone")

    def normalize(v1: Vector, v2: Vector):
        a, b = v1
        x, y = _ext_gcd(a, b)
        t = ((b, x), (-a, y))  # v1 @ t == (0, 1), det == 1
        w = vec_mat(v2, t)
        if w[0] < 0:
            t = _mat2(t, ((-1, 0), (0, 1)))
            w = vec_mat(v2, t)
        n = w[0]
        q = (-w[1]) % n
        t = _mat2(t, ((1, (-q - w[1]) // n), (0, 1)))
        return n, q, t

    best = None
    for v1, v2 in ((cone.rays[0], cone.rays[1]), (cone.rays[1], cone.rays[0])):
        n, q, t = normalize(v1, v2)
        if n == 1:
            best = (1, 0, t)
            break
        if best is None or q < best[1]:
            best = (n, q, t)
    n, q, t = best
    if not is_unimodular(mat(t)) or vec_mat(cone.rays[0], t) not in ((0, 1), (n, -q)):
        raise GeometryError("internal: normal form transform is wrong")
    return n, q, t
