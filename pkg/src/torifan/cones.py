"""Rational polyhedral cones and fans over an integer lattice.

A ``Cone`` stores primitive, lexicographically sorted extreme ray
generators, plus an optional lineality lattice (canonical HNF basis) for
the non-strongly-convex cones that arise as duals of lower-dimensional
cones.  All computations are exact; duality is computed by facet
enumeration inside the span, lower-dimensional cones are handled through a
saturated basis of their span.

The pairing between exponent vectors (M-side) and lattice points (N-side)
is the standard dot product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

from .errors import CapacityError, GeometryError
from .lattice import (
    Matrix,
    Vector,
    content,
    det,
    dot,
    identity,
    int_inverse,
    kernel_lattice,
    primitive,
    quotient_basis,
    rational_inverse,
    saturation,
    section_for_sublattice,
    smith_normal_form,
    solve_left_int,
    vec_add,
    vec_mat,
    vec_neg,
    vec_scale,
    vec_sub,
)

HILBERT_POINT_BOUND = 1_000_000
HILBERT_RANK_BOUND = 4


@dataclass(frozen=True)
class Cone:
    """Rational polyhedral cone: primitive extreme rays + lineality basis."""

    rank: int
    rays: tuple[Vector, ...]
    lines: tuple[Vector, ...] = ()

    @classmethod
    def make(cls, rays, rank: int, lines=()) -> "Cone":
        """Canonicalize: saturate lines, reduce rays modulo lines, keep only
        primitive extreme generators, sort.  Raises GeometryError if the ray
        part is not strongly convex modulo the declared lineality."""
        rays = [tuple(int(x) for x in r) for r in rays]
        lines = [tuple(int(x) for x in l) for l in lines]
        for v in rays + lines:
            if len(v) != rank:
                raise GeometryError("generator rank does not match the cone rank")
        lat = saturation(tuple(l for l in lines if any(l)), rank) if lines else ()
        if lat:
            qb = quotient_basis(lat, rank)
            proj = []
            for r in rays:
                p = qb.project(r)
                if any(p):
                    proj.append(primitive(p))
            proj = sorted(set(proj))
            kept = _extreme_subset(proj, rank - len(lat))
            out_rays = sorted(qb.section(p) for p in kept)
        else:
            proj = sorted(set(primitive(r) for r in rays if any(r)))
            out_rays = sorted(_extreme_subset(proj, rank))
        return cls(rank, tuple(out_rays), lat)

    @classmethod
    def zero(cls, rank: int) -> "Cone":
        return cls(rank, ())

    @property
    def is_strongly_convex(self) -> bool:
        return not self.lines

    def key(self):
        return (self.lines, self.rays)


def _extreme_subset(rays, rank: int) -> list[Vector]:
    """Extreme generators among ``rays`` (full ambient lattice Z^rank).

    Raises GeometryError when the rays positively span a line.
    """
    if not rays:
        return []
    span = saturation(tuple(rays), rank)
    k = len(span)
    coords = [solve_left_int(span, r) for r in rays]
    normals = _facet_normals(coords, k)
    if kernel_lattice(tuple(normals), k) != ():
        raise GeometryError("cone is not strongly convex")
    out = []
    for r, c in zip(rays, coords):
        tight = tuple(n for n in normals if dot(n, c) == 0)
        kdim = k - (len(saturation(tight, k)) if tight else 0)
        if kdim == 1:
            out.append(r)
    return out


def _facet_normals(gens, k: int) -> list[Vector]:
    """Extreme rays of {y in Z^k : <y, g> >= 0 for all g} when the g span Q^k.

    This is facet enumeration: candidates are kernels of (k-1)-subsets of
    the generators, kept when all pairings have one sign.
    """
    if k == 0:
        return []
    gens = sorted(set(tuple(g) for g in gens))
    if k == 1:
        out = []
        for cand in ((1,), (-1,)):
            prods = [dot(cand, g) for g in gens]
            if gens and all(p >= 0 for p in prods):
                out.append(cand)
        return out
    found = set()
    for subset in combinations(gens, k - 1):
        ker = kernel_lattice(subset, k)
        if len(ker) != 1:
            continue
        w = ker[0]
        prods = [dot(w, g) for g in gens]
        if all(p >= 0 for p in prods):
            found.add(w)
        elif all(p <= 0 for p in prods):
            found.add(vec_neg(w))
    return sorted(found)


@lru_cache(maxsize=None)
def dual_cone(cone: Cone) -> Cone:
    """Dual cone in the dual lattice; lineality = (span cone)^perp.

    The double dual of a strongly convex cone is the cone itself; the dual
    of a non-full-dimensional cone carries lineality (flagged through the
    ``lines`` field).
    """
    d = cone.rank
    gens = cone.rays + cone.lines
    dlines = kernel_lattice(gens, d) if gens else identity(d)
    if not gens:
        return Cone(d, (), dlines)
    b = saturation(gens, d)
    k = len(b)
    ray_coords = [solve_left_int(b, r) for r in cone.rays]
    line_coords = [solve_left_int(b, l) for l in cone.lines]
    if line_coords:
        k2b = kernel_lattice(tuple(line_coords), k)
        if not k2b:
            bars = []
        else:
            cons = [tuple(dot(row, r) for row in k2b) for r in ray_coords]
            bars = [vec_mat(y, k2b) for y in _facet_normals(cons, len(k2b))]
    else:
        bars = _facet_normals(ray_coords, k)
    section = section_for_sublattice(b, d)
    if dlines:
        qb = quotient_basis(dlines, d)
        lifted = [qb.reduce(vec_mat(m, section)) for m in bars]
    else:
        lifted = [vec_mat(m, section) for m in bars]
    for m in lifted:
        if content(m) != 1:
            raise GeometryError("internal: dual ray is not primitive")
    return Cone(d, tuple(sorted(lifted)), dlines)


def span_dim(cone: Cone) -> int:
    gens = cone.rays + cone.lines
    return len(saturation(gens, cone.rank)) if gens else 0


def span_basis(cone: Cone) -> Matrix:
    gens = cone.rays + cone.lines
    return saturation(gens, cone.rank) if gens else ()


def is_simplicial(cone: Cone) -> bool:
    return not cone.lines and len(cone.rays) == span_dim(cone)


def cone_contains(cone: Cone, v) -> bool:
    v = tuple(int(x) for x in v)
    if len(v) != cone.rank:
        raise GeometryError("point rank does not match the cone rank")
    d = dual_cone(cone)
    return (all(dot(m, v) >= 0 for m in d.rays)
            and all(dot(l, v) == 0 for l in d.lines))


def cone_contains_cone(cone: Cone, tau: Cone) -> bool:
    return (all(cone_contains(cone, r) for r in tau.rays)
            and all(cone_contains(cone, l) and cone_contains(cone, vec_neg(l))
                    for l in tau.lines))


def in_relative_interior(cone: Cone, v) -> bool:
    v = tuple(int(x) for x in v)
    d = dual_cone(cone)
    return (all(dot(m, v) > 0 for m in d.rays)
            and all(dot(l, v) == 0 for l in d.lines))


def relint_point(cone: Cone) -> Vector:
    out = (0,) * cone.rank
    for r in cone.rays:
        out = vec_add(out, r)
    return out


def face_of(cone: Cone, m) -> Cone:
    """The face of the cone cut out by a dual vector m (m in dual(cone))."""
    rays = [r for r in cone.rays if dot(m, r) == 0]
    return Cone.make(rays, cone.rank, lines=cone.lines)


def facets(cone: Cone) -> tuple[Cone, ...]:
    """The maximal proper faces."""
    return tuple(face_of(cone, m) for m in dual_cone(cone).rays)


def smallest_face_containing(cone: Cone, v) -> Cone:
    if not cone_contains(cone, v):
        raise GeometryError("point is not in the cone")
    m = (0,) * cone.rank
    for ray in dual_cone(cone).rays:
        if dot(ray, v) == 0:
            m = vec_add(m, ray)
    return face_of(cone, m)


def is_face(cone: Cone, tau: Cone) -> bool:
    if tau.rank != cone.rank or tau.lines != cone.lines:
        return False
    if not all(cone_contains(cone, r) for r in tau.rays):
        return False
    m = (0,) * cone.rank
    for ray in dual_cone(cone).rays:
        if all(dot(ray, r) == 0 for r in tau.rays):
            m = vec_add(m, ray)
    return face_of(cone, m) == tau


def rays_from_inequalities(ineqs, eqs, rank: int) -> tuple[Vector, ...]:
    """Extreme rays of {v : <c, v> >= 0, <e, v> = 0}; the region must be
    strongly convex."""
    cons = [tuple(int(x) for x in c) for c in ineqs]
    for e in eqs:
        e = tuple(int(x) for x in e)
        cons.append(e)
        cons.append(vec_neg(e))
    if kernel_lattice(tuple(cons), rank) != ():
        raise GeometryError("inequality region is not strongly convex")
    uniq = sorted(set(c for c in cons if any(c)))
    found = set()
    for subset in combinations(range(len(uniq)), rank - 1):
        rows = tuple(uniq[i] for i in subset)
        ker = kernel_lattice(rows, rank) if rows else identity(rank)
        if len(ker) != 1:
            continue
        w = ker[0]
        prods = [dot(c, w) for c in cons]
        if all(p >= 0 for p in prods):
            found.add(w)
        elif all(p <= 0 for p in prods):
            found.add(vec_neg(w))
    return tuple(sorted(found))


def membership_constraints(cone: Cone) -> tuple[tuple[Vector, ...], tuple[Vector, ...]]:
    d = dual_cone(cone)
    return d.rays, d.lines


def intersect_cones(c1: Cone, c2: Cone) -> Cone:
    if c1.rank != c2.rank:
        raise GeometryError("cones live in different lattices")
    if c1.lines or c2.lines:
        raise GeometryError("intersection requires strongly convex cones")
    i1, e1 = membership_constraints(c1)
    i2, e2 = membership_constraints(c2)
    rays = rays_from_inequalities(i1 + i2, e1 + e2, c1.rank)
    return Cone.make(rays, c1.rank)


def apply_matrix(cone: Cone, a: Matrix) -> Cone:
    """Image of the cone under the lattice map v -> v @ a."""
    return Cone.make([vec_mat(r, a) for r in cone.rays], cone.rank,
                     lines=[vec_mat(l, a) for l in cone.lines])


def multiplicity(cone: Cone) -> int:
    """Index of the ray-spanned sublattice inside N intersected with the span;
    1 iff the affine chart is smooth."""
    if not is_simplicial(cone):
        raise GeometryError("multiplicity requires a simplicial cone")
    if not cone.rays:
        return 1
    b = span_basis(cone)
    coords = tuple(solve_left_int(b, r) for r in cone.rays)
    return abs(det(coords))


def valuation(m, ray) -> int:
    """Order of vanishing of the monomial with exponent vector m along the
    divisor of a primitive ray: the pairing <ray, m>."""
    m = tuple(int(x) for x in m)
    ray = tuple(int(x) for x in ray)
    if len(m) != len(ray):
        raise GeometryError("exponent and ray ranks differ")
    return dot(m, ray)


# ---------------------------------------------------------------------------
# triangulation and Hilbert bases


def pull_triangulate(cone: Cone) -> tuple[Cone, ...]:
    """Deterministic pulling triangulation at the lex-smallest ray.

    Uses only existing rays; the triangulation of a face depends only on
    that face, so applying this cone by cone keeps a fan compatible.
    """
    if cone.lines:
        raise GeometryError("triangulation requires a strongly convex cone")
    if is_simplicial(cone):
        return (cone,)
    v = min(cone.rays)
    out = []
    for f in facets(cone):
        if cone_contains(f, v):
            continue
        for s in pull_triangulate(f):
            out.append(Cone.make(s.rays + (v,), cone.rank))
    return tuple(out)


def _adjugate(a: Matrix) -> tuple[Matrix, int]:
    """(adj, det) with adj @ a = det * I, computed exactly."""
    d = det(a)
    if d == 0:
        raise GeometryError("singular matrix has no adjugate here")
    inv = rational_inverse(a)
    adj = tuple(tuple(int(x * d) for x in row) for row in inv)
    return adj, d


def parallelepiped_points(rays: Matrix):
    """Lattice points of {sum l_i r_i : 0 <= l_i < 1} for independent rays
    spanning Z^k, together with their barycentric numerators over |det|.

    Yields (point, lambda_numerators, abs_det); exactly |det| points.
    """
    k = len(rays)
    snf = smith_normal_form(rays)
    diag = [snf.d[i][i] for i in range(k)]
    vinv = int_inverse(snf.v)
    adj, d = _adjugate(rays)
    if d < 0:
        adj = tuple(tuple(-x for x in row) for row in adj)
        d = -d
    # enumerate coset representatives of Z^k / (row lattice of rays)
    idx = [0] * k
    while True:
        x0 = vec_mat(tuple(idx), vinv)
        nums = vec_mat(x0, adj)
        x = x0
        for i, n in enumerate(nums):
            q = n // d
            if q:
                x = vec_sub(x, vec_scale(q, rays[i]))
        red = tuple(n % d for n in nums)
        yield x, red, d
        for i in range(k):
            idx[i] += 1
            if idx[i] < diag[i]:
                break
            idx[i] = 0
        else:
            return


@lru_cache(maxsize=None)
def hilbert_basis(cone: Cone) -> tuple[Vector, ...]:
    """Minimal generating set of cone `intersect` Z^rank (desk scale).

    Candidates are the ray generators and the parallelepiped points of a
    pulling triangulation; reducible candidates are pruned against a
    strictly positive grading.  Hard bounds: span rank <= 4, at most 10^6
    candidate points.
    """
    if cone.lines:
        raise GeometryError("Hilbert basis requires a strongly convex cone")
    if not cone.rays:
        return ()
    k = span_dim(cone)
    if k > HILBERT_RANK_BOUND:
        raise CapacityError(f"Hilbert basis supports span rank <= {HILBERT_RANK_BOUND}")
    b = span_basis(cone)
    coords = [solve_left_int(b, r) for r in cone.rays]
    normals = _facet_normals(coords, k)
    total = 0
    pts = set(coords)
    for simplex in pull_triangulate(cone):
        srays = tuple(solve_left_int(b, r) for r in simplex.rays)
        d = abs(det(srays))
        total += d
        if total > HILBERT_POINT_BOUND:
            raise CapacityError("Hilbert enumeration exceeded the candidate bound")
        for x, _, _ in parallelepiped_points(srays):
            if any(x):
                pts.add(x)
    grade_vec = (0,) * k
    for n in normals:
        grade_vec = vec_add(grade_vec, n)
    cands = sorted(pts, key=lambda x: (dot(grade_vec, x), x))
    kept: list[Vector] = []
    for x in cands:
        reducible = False
        for y in kept:
            diff = vec_sub(x, y)
            if any(diff) and all(dot(n, diff) >= 0 for n in normals):
                reducible = True
                break
        if not reducible:
            kept.append(x)
    return tuple(sorted(vec_mat(x, b) for x in kept))


# ---------------------------------------------------------------------------
# fans


@dataclass(frozen=True)
class Fan:
    """A fan given by its maximal cones (canonically sorted)."""

    rank: int
    cones: tuple[Cone, ...]

    @classmethod
    def make(cls, cones, rank: int) -> "Fan":
        cs = sorted(set(cones), key=lambda c: c.key())
        for c in cs:
            if c.rank != rank:
                raise GeometryError("cone rank does not match the fan rank")
        return cls(rank, tuple(cs))

    def contains(self, v) -> bool:
        return any(cone_contains(c, v) for c in self.cones)


def fan_apply_matrix(fan: Fan, a: Matrix) -> Fan:
    return Fan.make([apply_matrix(c, a) for c in fan.cones], fan.rank)


def fan_validate(fan: Fan) -> list[str]:
    """Diagnostics for the fan axioms; empty list means valid.

    Works on raw (non-canonical) data so defective inputs can be reported.
    """
    diags: list[str] = []
    structural_ok = True
    canon_cones: list[Cone] = []
    for i, c in enumerate(fan.cones):
        if c.rank != fan.rank:
            diags.append(f"cone {i}: rank {c.rank} does not match fan rank {fan.rank}")
            structural_ok = False
            continue
        if c.lines:
            diags.append(f"cone {i}: carries lineality, not strongly convex")
            structural_ok = False
        seen = set()
        bad = False
        for r in c.rays:
            if not any(r):
                diags.append(f"cone {i}: zero ray")
                bad = True
                continue
            if content(r) != 1:
                diags.append(f"cone {i}: primitivity violation: ray {tuple(r)}")
                bad = True
            if r in seen:
                diags.append(f"cone {i}: duplicate ray {tuple(r)}")
                bad = True
            seen.add(r)
        if bad:
            structural_ok = False
            continue
        try:
            canon = Cone.make(c.rays, c.rank, lines=c.lines)
        except GeometryError as exc:
            diags.append(f"cone {i}: {exc}")
            structural_ok = False
            continue
        extra = set(primitive(r) for r in c.rays) - set(canon.rays)
        for r in sorted(extra):
            diags.append(f"cone {i}: ray {tuple(r)} is not an extreme generator")
            structural_ok = False
        canon_cones.append(canon)
    if not structural_ok:
        return diags
    for i, j in combinations(range(len(canon_cones)), 2):
        c1, c2 = canon_cones[i], canon_cones[j]
        inter = intersect_cones(c1, c2)
        if inter == c1 or inter == c2:
            diags.append(f"cones {i} and {j}: one is contained in the other")
            continue
        p = relint_point(inter)
        if any(p) and in_relative_interior(c1, p) and in_relative_interior(c2, p):
            diags.append(f"cones {i} and {j}: overlapping interiors")
        elif not (is_face(c1, inter) and is_face(c2, inter)):
            diags.append(f"cones {i} and {j}: intersection is not a common face")
    return diags


def fan_covers_cone(fan: Fan, sigma: Cone) -> bool:
    """Exact support-equality certificate |fan| == sigma via facet pairing.

    Every cone must lie in sigma with full span dimension; every facet of a
    fan cone must either be shared by exactly two cones or lie in a facet
    hyperplane of sigma.
    """
    if not fan.cones:
        return span_dim(sigma) == 0
    sd = span_dim(sigma)
    dsig = dual_cone(sigma)
    drays, dlines = dsig.rays, dsig.lines
    counts: dict[tuple, int] = {}
    for c in fan.cones:
        for r in c.rays:
            if not (all(dot(m, r) >= 0 for m in drays)
                    and all(dot(l, r) == 0 for l in dlines)):
                return False
        if not c.lines and len(c.rays) == sd and sd == fan.rank:
            # full-dimensional simplicial fast path: facets drop one ray
            if det(c.rays) == 0:
                return False
            facet_keys = [c.rays[:i] + c.rays[i + 1:] for i in range(sd)]
        else:
            if span_dim(c) != sd:
                return False
            facet_keys = [f.rays for f in facets(c)]
        for f in facet_keys:
            counts[f] = counts.get(f, 0) + 1
    for f, n in counts.items():
        if n == 2:
            continue
        if n == 1 and any(all(dot(m, r) == 0 for r in f) for m in drays):
            continue
        return False
    return True


def star_subdivision(fan: Fan, v) -> Fan:
    """Refine the fan by inserting the primitive lattice point v as a ray."""
    v = tuple(int(x) for x in v)
    if len(v) != fan.rank:
        raise GeometryError("point rank does not match the fan rank")
    if not any(v):
        raise GeometryError("cannot subdivide at the zero vector")
    if content(v) != 1:
        raise GeometryError(f"subdivision point {v} is not primitive")
    if not fan.contains(v):
        raise GeometryError(f"subdivision point {v} is outside the support")
    out = []
    for c in fan.cones:
        if not cone_contains(c, v):
            out.append(c)
            continue
        for f in facets(c):
            if cone_contains(f, v):
                continue
            out.append(Cone.make(f.rays + (v,), fan.rank))
    return Fan.make(out, fan.rank)


# ---------------------------------------------------------------------------
# monomial ideals and their normalized blowups


@dataclass(frozen=True)
class MonomialIdeal:
    """Finite exponent-vector generating set of a torus-invariant ideal."""

    rank: int
    gens: tuple[Vector, ...]

    @classmethod
    def make(cls, gens, rank: int) -> "MonomialIdeal":
        gs = sorted(set(tuple(int(x) for x in g) for g in gens))
        if not gs:
            raise GeometryError("a monomial ideal needs at least one generator")
        for g in gs:
            if len(g) != rank:
                raise GeometryError("generator rank does not match the ideal rank")
        return cls(rank, tuple(gs))


def _in_dual_semigroup(cone: Cone, m) -> bool:
    return (all(dot(m, r) >= 0 for r in cone.rays)
            and all(dot(m, l) == 0 for l in cone.lines))


def minimalize_in(ideal: MonomialIdeal, cone: Cone) -> MonomialIdeal:
    """Drop generators dominated by another one within the chart semigroup
    of the cone; of unit-equivalent generators the lex-least is kept."""
    kept = []
    for g in ideal.gens:
        drop = False
        for h in ideal.gens:
            if h == g:
                continue
            if _in_dual_semigroup(cone, vec_sub(g, h)):
                if not _in_dual_semigroup(cone, vec_sub(h, g)) or h < g:
                    drop = True
                    break
        if not drop:
            kept.append(g)
    return MonomialIdeal(ideal.rank, tuple(kept))


def blowup_with_charts(cone: Cone, ideal: MonomialIdeal) -> list[tuple[Cone, Vector]]:
    """Charts of the normalized blowup of a torus-invariant monomial ideal.

    The fan of the normalized blowup is the coarsest refinement of the cone
    on which v -> min_g <v, g> is linear; each full-dimensional linearity
    domain is returned with its minimizing generator.
    """
    if ideal.rank != cone.rank:
        raise GeometryError("ideal rank does not match the cone rank")
    for g in ideal.gens:
        if not _in_dual_semigroup(cone, g):
            raise GeometryError(
                f"ideal generator {tuple(g)} is not a regular monomial on the chart")
    gens = minimalize_in(ideal, cone).gens
    ineqs, eqs = membership_constraints(cone)
    sd = span_dim(cone)
    charts = []
    for g in gens:
        cons = list(ineqs) + [vec_sub(h, g) for h in gens if h != g]
        rays = rays_from_inequalities(cons, eqs, cone.rank)
        piece = Cone.make(rays, cone.rank)
        if span_dim(piece) == sd:
            charts.append((piece, g))
    return charts


def blowup_monomial_ideal(cone: Cone, ideal: MonomialIdeal) -> Fan:
    """Fan of the normalized blowup; refines the cone, support unchanged."""
    return Fan.make([c for c, _ in blowup_with_charts(cone, ideal)], cone.rank)
