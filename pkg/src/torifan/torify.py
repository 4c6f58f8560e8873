"""Torific ideals and their normalized blowups, with per-chart toroidality
verification, localization/variance checks, and valuation-based strictness
reports.

A pre-toroidal situation is an affine torus embedding X0 (base cone), a
finite diagonal subgroup G of the base torus, and a character psi_x giving
the action on one extra free coordinate x.  Internally the group is stored
as its graph in (Q/Z)^(d0+1): each generator carries its x-weight as the
last component.  This makes psi_x a monomial pairing like any other and
guarantees it is a well-defined character exactly when the graph projects
isomorphically to the base part.

The torific ideal is generated by x together with the minimal base
monomials on which the group acts through psi_x; blowing it up makes the
action toroidal on every chart.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm

from .errors import CapacityError, GeometryError
from .cones import (
    Cone,
    Fan,
    MonomialIdeal,
    apply_matrix,
    blowup_with_charts,
    cone_contains,
    dual_cone,
    fan_covers_cone,
    hilbert_basis,
    is_face,
    smallest_face_containing,
    span_dim,
)
from .diagonal import (
    Character,
    FiniteDiagonalGroup,
    generating_subset,
    monomial_character,
    qvec,
)
from .lattice import (
    Matrix,
    Vector,
    coset_reduce,
    dot,
    hermite_normal_form,
    identity,
    int_inverse,
    is_unimodular,
    kernel_lattice,
    mat,
    projected_lattice,
    quotient_basis,
    transpose,
    vec_add,
    vec_mat,
    vec_neg,
    vec_sub,
)

MODULE_POINT_BOUND = 1_000_000


@dataclass(frozen=True)
class PreToroidalSitus:
    """Base chart, diagonal group, and the character on the free coordinate.

    ``graph_generators`` live in (Q/Z)^(base_rank + 1); the last component
    of each is its psi_x value.
    """

    base_cone: Cone
    graph_generators: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def make(cls, base_cone: Cone, group_gens, psi_x=None) -> "PreToroidalSitus":
        """Build from base-rank generators plus psi_x values, or from
        full-rank generators whose last components are the x-weights (then
        psi_x, if given, must agree)."""
        d0 = base_cone.rank
        gens = [qvec(g) for g in group_gens]
        if all(len(g) == d0 + 1 for g in gens):
            graph = gens
            if psi_x is not None:
                psi = qvec(psi_x)
                if tuple(g[-1] for g in graph) != psi:
                    raise GeometryError(
                        "psi_x conflicts with the x-components of the generators")
        elif all(len(g) == d0 for g in gens):
            if psi_x is None:
                raise GeometryError("psi_x is required with base-rank generators")
            psi = qvec(psi_x)
            if len(psi) != len(gens):
                raise GeometryError("psi_x needs one value per generator")
            graph = [g + (w,) for g, w in zip(gens, psi)]
        else:
            raise GeometryError("generator ranks are inconsistent")
        situs = cls(base_cone, tuple(graph))
        situs.validate()
        return situs

    @property
    def base_rank(self) -> int:
        return self.base_cone.rank

    @property
    def rank(self) -> int:
        return self.base_cone.rank + 1

    @property
    def psi_x(self) -> tuple[Fraction, ...]:
        return tuple(g[-1] for g in self.graph_generators)

    def group(self) -> FiniteDiagonalGroup:
        """The graph group inside the torus of the total chart."""
        return FiniteDiagonalGroup.make(self.rank, self.graph_generators)

    def base_group(self) -> FiniteDiagonalGroup:
        return FiniteDiagonalGroup.make(
            self.base_rank, [g[:-1] for g in self.graph_generators])

    def validate(self) -> None:
        if self.base_cone.lines:
            raise GeometryError("base cone must be strongly convex")
        if self.group().order() != self.base_group().order():
            raise GeometryError(
                "group does not inject into the base torus: "
                "psi_x is not a well-defined character")

    def psi_trivial(self) -> bool:
        return all(w == 0 for w in self.psi_x)

    def total_cone(self) -> Cone:
        """Chart cone of X0 x A^1: the base cone times the x-axis ray."""
        rays = [r + (0,) for r in self.base_cone.rays]
        rays.append(self.x_ray())
        return Cone.make(rays, self.rank)

    def x_ray(self) -> Vector:
        return (0,) * self.base_rank + (1,)

    def x_exponent(self) -> Vector:
        return (0,) * self.base_rank + (1,)

    def character(self, exponent) -> Character:
        return monomial_character(exponent, self.group())

    def element_graph(self, base_element) -> tuple[Fraction, ...]:
        """Lift a base torus element of G to its graph (appends psi_x)."""
        base = qvec(base_element)
        for e in self.group().elements():
            if e[:-1] == base:
                return e
        raise GeometryError("element does not belong to the group")


# ---------------------------------------------------------------------------
# the torific ideal


def _semigroup_data(total: Cone):
    """(hilbert gens incl. unit directions, unit lattice reducer, facet rays).

    The chart semigroup of a non-full-dimensional cone has invertible
    monomials; they form the lineality of the dual cone.  Hilbert
    generators are computed on the pointed quotient and lifted canonically.
    """
    dual = dual_cone(total)
    units = dual.lines
    if units:
        qb = quotient_basis(units, total.rank)
        image = Cone.make([qb.project(m) for m in dual.rays], total.rank - len(units))
        hilb_proj = hilbert_basis(image)
        back = {qb.project(m): m for m in dual.rays}
        hilb = tuple(qb.section(h) for h in hilb_proj)
        unit_gens = units + tuple(vec_neg(u) for u in units)
    else:
        qb = None
        hilb = hilbert_basis(Cone.make(dual.rays, total.rank))
        unit_gens = ()
    return hilb, qb, unit_gens


def _reduce_mod_units(qb, m):
    return qb.reduce(m) if qb is not None else tuple(m)


def _trivial_character_units(situs: PreToroidalSitus, units: Matrix) -> Matrix:
    """HNF basis of the sublattice of invertible monomials with trivial
    character (finite index in the full unit lattice)."""
    if not units:
        return ()
    group = situs.group()
    ngen = len(situs.graph_generators)
    if ngen == 0:
        return units
    chars = [monomial_character(u, group).values for u in units]
    denom = 1
    for ch in chars:
        for x in ch:
            denom = lcm(denom, x.denominator)
    lam = len(units)
    # a in Z^lam has trivial total character iff the scaled character sum
    # is divisible by denom in every component
    m_rows = [tuple(int(x * denom) for x in ch) for ch in chars]
    m_rows += [tuple(-denom if i == j else 0 for i in range(ngen))
               for j in range(ngen)]
    ker = kernel_lattice(transpose(tuple(m_rows)), lam + ngen)
    coeffs = projected_lattice(ker, lam)
    out = []
    for a in coeffs:
        v = (0,) * situs.rank
        for c, u in zip(a, units):
            v = vec_add(v, tuple(c * x for x in u))
        out.append(v)
    if not out:
        return ()
    h, _ = hermite_normal_form(tuple(out))
    return tuple(row for row in h if any(row))


def torific_ideal(situs: PreToroidalSitus) -> MonomialIdeal:
    """Generators: x together with the minimal monomials of the chart
    semigroup whose restricted character equals psi_x.

    Minimality is within the coset as a module over the chart semigroup;
    generators are canonical modulo the character-trivial invertible
    monomials (an invertible monomial can itself carry the character, in
    which case the ideal is principal on a unit).  For the trivial
    character this is the unit ideal.
    """
    group = situs.group()
    order = group.order()
    total = situs.total_cone()
    if situs.psi_trivial():
        return MonomialIdeal.make([(0,) * situs.rank], situs.rank)
    hilb, _, _ = _semigroup_data(total)
    units = dual_cone(total).lines
    u0 = _trivial_character_units(situs, units)
    steps = list(hilb)
    for u in units:
        steps.append(tuple(u))
        steps.append(vec_neg(u))
    target = situs.character(situs.x_exponent()).values
    step_chars = [situs.character(h).values for h in steps]
    zero = coset_reduce(u0, (0,) * situs.rank)
    frontier = {zero: situs.character(zero).values}
    seen = dict(frontier)
    candidates = set()
    for _ in range(order):
        nxt = {}
        for p, ch in frontier.items():
            for h, hch in zip(steps, step_chars):
                q = coset_reduce(u0, vec_add(p, h))
                if q in seen or q in nxt:
                    continue
                qch = tuple((a + b) % 1 for a, b in zip(ch, hch))
                nxt[q] = qch
                if qch == target:
                    candidates.add(q)
        seen.update(nxt)
        if len(seen) > MODULE_POINT_BOUND:
            raise CapacityError("torific generator enumeration exceeded its bound")
        frontier = nxt
        if not frontier:
            break
    if not candidates:
        raise GeometryError("internal: the torific coset has no elements in the chart")
    # a coset element is a minimal ideal generator unless another coset
    # element divides it in the chart semigroup (the quotient monomial is
    # then automatically invariant); representatives are canonical modulo
    # invertible monomials, so mutual division cannot occur
    rays = total.rays
    cands = sorted(candidates)
    minimal = []
    for m in cands:
        reducible = False
        for c in cands:
            if c == m:
                continue
            diff = vec_sub(m, c)
            if all(dot(diff, r) >= 0 for r in rays):
                reducible = True
                break
        if not reducible:
            minimal.append(m)
    return MonomialIdeal.make(minimal, situs.rank)


def canonical_module_gens(gens, total: Cone) -> tuple[Vector, ...]:
    """Canonicalize a module generating set over the chart semigroup of
    ``total``: reduce modulo invertible monomials, drop dominated
    generators, sort."""
    _, qb, _ = _semigroup_data(total)
    rays = total.rays
    reduced = sorted(set(_reduce_mod_units(qb, m) for m in gens))
    kept = []
    for m in reduced:
        drop = False
        for h in reduced:
            if h == m:
                continue
            diff = vec_sub(m, h)
            if all(dot(diff, r) >= 0 for r in rays):
                if not all(dot(vec_neg(diff), r) >= 0 for r in rays) or h < m:
                    drop = True
                    break
        if not drop:
            kept.append(m)
    return tuple(kept)


# ---------------------------------------------------------------------------
# torification and verification


@dataclass(frozen=True)
class ChartVerdict:
    cone: Cone
    center_generator: Vector
    verdict: str  # "toroidal" | "pre-toroidal only" | "not pre-toroidal"
    invariant_coordinate: Vector | None


@dataclass(frozen=True)
class TorifyReport:
    fan: Fan
    charts: tuple[ChartVerdict, ...]
    ideal: MonomialIdeal

    @property
    def all_toroidal(self) -> bool:
        return all(c.verdict == "toroidal" for c in self.charts)


def verify_toroidal(chart: Cone, situs: PreToroidalSitus,
                    fan: Fan | None = None) -> ChartVerdict:
    """Verdict for the group action on one chart.

    "toroidal" when either no ray of the chart carries the strict transform
    of V(x) (all chart divisors then lie in the toroidal boundary), or the
    chart splits off the x-direction as a free coordinate u with trivial
    character.  The splitting search is exact lattice arithmetic: u must
    pair to 1 with the x-ray, to 0 with every other ray, and the character
    condition is solved over the finite character group.
    """
    if fan is not None and chart not in fan.cones:
        raise GeometryError("chart does not belong to the fan")
    if situs.psi_trivial():
        return ChartVerdict(chart, (), "toroidal", None)
    ex = situs.x_ray()
    if ex not in chart.rays:
        return ChartVerdict(chart, (), "toroidal", None)
    others = tuple(r for r in chart.rays if r != ex)
    k = kernel_lattice(others, situs.rank) if others else identity(situs.rank)
    pairings = [dot(row, ex) for row in k]
    g = 0
    for p in pairings:
        g = gcd(g, abs(p))
    if g != 1:
        return ChartVerdict(chart, (), "not pre-toroidal", None)
    u0 = _combine_to_one(k, pairings)
    k0 = kernel_lattice(others + (ex,), situs.rank)
    group = situs.group()
    base = monomial_character(u0, group).values
    reachable = {(Fraction(0),) * len(base): (0,) * len(k0)}
    frontier = dict(reachable)
    for _ in range(group.order()):
        nxt = {}
        for ch, combo in frontier.items():
            for i, row in enumerate(k0):
                rch = monomial_character(row, group).values
                nch = tuple((a + b) % 1 for a, b in zip(ch, rch))
                if nch not in reachable:
                    nc = list(combo)
                    nc[i] += 1
                    nxt[nch] = tuple(nc)
        if not nxt:
            break
        reachable.update(nxt)
        frontier = nxt
    want = tuple((-v) % 1 for v in base)
    if want in reachable:
        combo = reachable[want]
        u = u0
        for c, row in zip(combo, k0):
            for _ in range(c):
                u = vec_add(u, row)
        assert monomial_character(u, group).is_trivial
        return ChartVerdict(chart, (), "toroidal", u)
    return ChartVerdict(chart, (), "pre-toroidal only", None)


def _combine_to_one(rows: Matrix, pairings) -> Vector:
    """Integer combination of the rows whose pairing value is 1."""
    # iterative extended gcd across the rows
    cur_vec = None
    cur_val = 0
    for row, p in zip(rows, pairings):
        if cur_vec is None:
            cur_vec, cur_val = row, p
            continue
        if p == 0:
            continue
        x, y = _ext_gcd(cur_val, p)
        new_val = cur_val * x + p * y
        cur_vec = vec_add(vec_mat((x,), (cur_vec,)), vec_mat((y,), (row,)))
        cur_val = new_val
        if abs(cur_val) == 1:
            break
    if cur_val == -1:
        cur_vec, cur_val = vec_neg(cur_vec), 1
    if cur_val != 1:
        raise GeometryError("internal: gcd combination failed")
    return cur_vec


def _ext_gcd(a: int, b: int) -> tuple[int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return old_s, old_t


def torify(situs: PreToroidalSitus) -> TorifyReport:
    """Normalized blowup of the torific ideal with per-chart verdicts.

    The support of the output fan is the total chart cone; on the chart
    whose center is x itself, the strict transform of V(x) is absent, so
    its boundary contains everything needed for the action to be toroidal.
    """
    total = situs.total_cone()
    ideal = torific_ideal(situs)
    charts = blowup_with_charts(total, ideal)
    fan = Fan.make([c for c, _ in charts], situs.rank)
    if not fan_covers_cone(fan, total):
        raise GeometryError("internal: blowup does not cover the chart")
    records = []
    for cone, g in charts:
        v = verify_toroidal(cone, situs)
        if g == situs.x_exponent() and situs.x_ray() in cone.rays:
            raise GeometryError("internal: x-chart keeps the strict V(x)")
        records.append(ChartVerdict(cone, g, v.verdict, v.invariant_coordinate))
    return TorifyReport(fan, tuple(records), ideal)


# ---------------------------------------------------------------------------
# localization and variance


def localized_situs(situs: PreToroidalSitus, tau: Cone) -> PreToroidalSitus:
    """Situs at the distinguished point of the stratum of a base face tau:
    base chart becomes the face chart, the group becomes the stabilizer."""
    if not is_face(situs.base_cone, tau):
        raise GeometryError("tau is not a face of the base cone")
    perp = kernel_lattice(tau.rays + tau.lines, situs.base_rank)
    elems = situs.group().elements()
    sub = [e for e in elems
           if all(sum((Fraction(x) * c for x, c in zip(row, e[:-1])), Fraction(0)) % 1 == 0
                  for row in perp)]
    gens = generating_subset(sub, situs.rank)
    return PreToroidalSitus(tau, tuple(gens))


def localization_check(situs: PreToroidalSitus, tau: Cone) -> bool:
    """Does the torific ideal localize to the torific ideal of the
    localized situs?  Generator sets are compared after saturation by the
    invertible monomials of the face chart."""
    loc = localized_situs(situs, tau)
    local_total = loc.total_cone()
    lhs = canonical_module_gens(torific_ideal(loc).gens, local_total)
    rhs = canonical_module_gens(torific_ideal(situs).gens, local_total)
    return lhs == rhs


def variance_check(situs: PreToroidalSitus, other: PreToroidalSitus,
                   phi: Matrix) -> bool:
    """Does the exponent map m -> m @ phi carry the torific ideal of
    ``other`` to the torific ideal of ``situs``?

    phi must be a unimodular monomial isomorphism respecting chart,
    boundary (base rays vs x-ray), and group; otherwise GeometryError.
    """
    phi = mat(phi)
    if situs.rank != other.rank or len(phi) != situs.rank:
        raise GeometryError("rank mismatch in the comparison data")
    if not is_unimodular(phi):
        raise GeometryError("phi is not unimodular")
    psi_n = transpose(int_inverse(phi))  # ray map N(situs) -> N(other)
    total_s = situs.total_cone()
    total_o = other.total_cone()
    if set(vec_mat(r, psi_n) for r in total_s.rays) != set(total_o.rays):
        raise GeometryError("phi does not map the chart onto the chart")
    base_rays_s = set(r + (0,) for r in situs.base_cone.rays)
    base_rays_o = set(r + (0,) for r in other.base_cone.rays)
    if set(vec_mat(r, psi_n) for r in base_rays_s) != base_rays_o:
        raise GeometryError("phi does not preserve the boundary")
    # group transport: g -> g @ phi^T must carry the graph group onto the other
    phi_t = transpose(phi)
    img = {tuple(v % 1 for v in vec_mat(e, phi_t))
           for e in situs.group().elements()}
    if img != set(other.group().elements()):
        raise GeometryError("phi does not carry the group onto the group")
    pulled = [vec_mat(m, phi) for m in torific_ideal(other).gens]
    lhs = canonical_module_gens(pulled, total_s)
    rhs = canonical_module_gens(torific_ideal(situs).gens, total_s)
    return lhs == rhs


# ---------------------------------------------------------------------------
# strictness via orders of vanishing


@dataclass(frozen=True)
class ValuationRow:
    ray: Vector
    image_ray: Vector
    orders: tuple[int, ...]           # n_j, then n as last entry
    pullback_orders: tuple[int, ...]  # n'_j, then n'
    image_orders: tuple[int, ...]     # n''_j, then n''
    maps_into_vx: bool
    strict: bool


@dataclass(frozen=True)
class ValuationReport:
    element: tuple[Fraction, ...]
    symmetry: Matrix
    monomials: tuple[Vector, ...]     # the f_j, then the x-exponent
    rows: tuple[ValuationRow, ...]

    @property
    def all_strict(self) -> bool:
        return all(r.strict for r in self.rows)


def strictness_report(situs: PreToroidalSitus, fan: Fan, element,
                      symmetry: Matrix | None = None) -> ValuationReport:
    """Orders of vanishing of the boundary monomials f_j and of x along
    every exceptional ray, compared with their pullbacks under a group
    element paired with a lattice symmetry of the fan.

    The diagonal part of a group element rescales monomials by a constant,
    so only the lattice symmetry moves valuations; equal orders for all
    f_j and for x force the symmetry to fix the exceptional ray.
    """
    d = situs.rank
    psi_n = mat(symmetry) if symmetry is not None else identity(d)
    if not is_unimodular(psi_n):
        raise GeometryError("symmetry is not unimodular")
    g = qvec(element)
    if len(g) == situs.base_rank:
        g = situs.element_graph(g)
    if g not in set(situs.group().elements()):
        raise GeometryError("element does not belong to the group")
    total = situs.total_cone()
    if set(vec_mat(r, psi_n) for r in total.rays) != set(total.rays):
        raise GeometryError("symmetry does not preserve the chart")
    if vec_mat(situs.x_ray(), psi_n) != situs.x_ray():
        raise GeometryError("symmetry does not preserve the boundary data")
    if set(apply_matrix(c, psi_n).rays for c in fan.cones) != \
            set(c.rays for c in fan.cones):
        raise GeometryError("symmetry does not preserve the fan")
    # transported group must be the same subgroup
    img = {tuple(v % 1 for v in vec_mat(e, psi_n))
           for e in situs.group().elements()}
    if img != set(situs.group().elements()):
        raise GeometryError("symmetry does not normalize the group")
    phi_m = transpose(psi_n)  # exponent-side pullback of the symmetry
    psi_inv = int_inverse(psi_n)
    base_dual = dual_cone(situs.base_cone)
    if base_dual.lines:
        raise GeometryError("strictness report needs a full-dimensional base")
    fs = [m + (0,) for m in hilbert_basis(Cone.make(base_dual.rays, situs.base_rank))]
    monos = tuple(fs) + (situs.x_exponent(),)
    exceptional = [r for c in fan.cones for r in c.rays
                   if r not in set(total.rays)]
    rows = []
    for ray in sorted(set(exceptional)):
        image_ray = vec_mat(ray, psi_inv)
        orders = tuple(dot(ray, m) for m in monos)
        pullback = tuple(dot(ray, vec_mat(m, phi_m)) for m in monos)
        image = tuple(dot(image_ray, vec_mat(m, phi_m)) for m in monos)
        face = smallest_face_containing(total, ray)
        center = (0,) * d
        for r in face.rays:
            center = vec_add(center, r)
        into_vx = dot(center, situs.x_exponent()) > 0
        rows.append(ValuationRow(
            ray=ray,
            image_ray=image_ray,
            orders=orders,
            pullback_orders=pullback,
            image_orders=image,
            maps_into_vx=into_vx,
            strict=orders == pullback,
        ))
    return ValuationReport(g, psi_n, monos, tuple(rows))
