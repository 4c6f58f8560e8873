"""Finite diagonal actions on toric charts, quotient cones, and the
semistable node models with their branch-separating blowup.

A node model is the binomial chart x*y = t_1^{k_1} * ... * t_r^{k_r} with a
number of extra smooth coordinates; its lattice of monomials is the free
lattice on t, s, x modulo nothing (y is eliminated through the relation
x + y = sum k_i t_i written additively).  The extra smooth coordinates are
torus factors of the toroidal structure: the chart cone does not span
their directions and the dual picks them up as lineality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .errors import GeometryError
from .cones import (
    Cone,
    Fan,
    MonomialIdeal,
    blowup_with_charts,
    dual_cone,
    is_face,
    span_dim,
)
from .diagonal import FiniteDiagonalGroup, generating_subset, qvec
from .lattice import (
    Matrix,
    Vector,
    dot,
    hermite_normal_form,
    identity,
    kernel_lattice,
    primitive,
    solve_left,
    transpose,
    vec_mat,
    vec_sub,
)


@dataclass(frozen=True)
class DiagonalAction:
    """A finite diagonal group acting on the torus of a chart cone."""

    group: FiniteDiagonalGroup
    chart: Cone

    def __post_init__(self):
        if self.group.ambient_rank != self.chart.rank:
            raise GeometryError("group rank does not match the chart rank")
        gens = [g for g in self.group.generators if any(x != 0 for x in g)]
        if len(set(gens)) != len(gens):
            raise GeometryError("duplicate torus element among the generators")


def quotient_cone(cone: Cone, group: FiniteDiagonalGroup) -> Cone:
    """The chart cone re-expressed in the overlattice N' = N + sum Z*g.

    The affine toric variety of the result is the quotient of the chart by
    the group; ray generators are re-primitivized in N'.
    """
    if group.ambient_rank != cone.rank:
        raise GeometryError("group rank does not match the cone rank")
    DiagonalAction(group, cone)
    gens = [qvec(g) for g in group.generators]
    if not gens:
        return cone
    d = cone.rank
    denom = 1
    for g in gens:
        for x in g:
            denom = lcm(denom, x.denominator)
    rows = [tuple(int(x * denom) for x in g) for g in gens]
    rows += [tuple(denom * e for e in row) for row in identity(d)]
    h, _ = hermite_normal_form(tuple(rows))
    basis = tuple(row for row in h if any(row))  # basis of denom * N'
    new_rays = []
    for r in cone.rays:
        x = solve_left(basis, tuple(denom * e for e in r))
        if any(f.denominator != 1 for f in x):
            raise GeometryError("ray is not in the overlattice")
        new_rays.append(primitive(tuple(int(f) for f in x)))
    new_lines = []
    for l in cone.lines:
        x = solve_left(basis, tuple(denom * e for e in l))
        new_lines.append(tuple(int(f) for f in x))
    return Cone.make(new_rays, d, lines=new_lines)


def stabilizer(action: DiagonalAction, tau: Cone) -> FiniteDiagonalGroup:
    """Stabilizer of the distinguished point of the stratum of a face tau:
    the elements pairing integrally with every monomial vanishing on tau."""
    if not is_face(action.chart, tau):
        raise GeometryError("tau is not a face of the chart cone")
    perp = kernel_lattice(tau.rays + tau.lines, action.chart.rank)
    elems = action.group.elements()
    sub = [e for e in elems
           if all(sum((Fraction(x) * c for x, c in zip(row, e)), Fraction(0)) % 1 == 0
                  for row in perp)]
    gens = generating_subset(sub, action.group.ambient_rank)
    return FiniteDiagonalGroup.make(action.group.ambient_rank, gens)


# ---------------------------------------------------------------------------
# semistable local models


@dataclass(frozen=True)
class NodeModel:
    """Local model x*y = t_1^{k_1} ... t_r^{k_r} with extra smooth coords.

    ``switch`` marks the presence of branch-switching symmetry elements;
    these are carried as the lattice involution x <-> y, not as torus
    elements.
    """

    k: tuple[int, ...]
    extra: int = 0
    switch: bool = False

    def __post_init__(self):
        if len(self.k) < 1 or any(ki < 1 for ki in self.k):
            raise GeometryError("node model needs r >= 1 exponents, all >= 1")
        if self.extra < 0:
            raise GeometryError("extra coordinate count cannot be negative")

    @property
    def r(self) -> int:
        return len(self.k)

    @property
    def rank(self) -> int:
        """Rank of the monomial lattice: t's, s's and x (y is eliminated)."""
        return self.r + self.extra + 1


@dataclass(frozen=True)
class SmoothModel:
    """Local model of a smooth fiber point: base coordinates plus a fiber
    coordinate x, marked when the section V(x) belongs to the boundary."""

    r: int
    extra: int = 0
    marked: bool = False

    def __post_init__(self):
        if self.r < 0 or self.extra < 0:
            raise GeometryError("coordinate counts cannot be negative")

    @property
    def rank(self) -> int:
        return self.r + self.extra + 1

    def chart_cone(self) -> Cone:
        """Boundary rays for the t's, plus the x-axis ray iff marked."""
        d = self.rank
        rays = [tuple(1 if j == i else 0 for j in range(d)) for i in range(self.r)]
        if self.marked:
            rays.append(tuple(1 if j == d - 1 else 0 for j in range(d)))
        return Cone.make(rays, d)


def _unit(i: int, d: int) -> Vector:
    return tuple(1 if j == i else 0 for j in range(d))


def node_x_exponent(model: NodeModel) -> Vector:
    return _unit(model.rank - 1, model.rank)


def node_y_exponent(model: NodeModel) -> Vector:
    d = model.rank
    out = [0] * d
    for i, ki in enumerate(model.k):
        out[i] = ki
    out[d - 1] = -1
    return tuple(out)


def node_dual_generators(model: NodeModel) -> tuple[tuple[Vector, ...], tuple[Vector, ...]]:
    """(rays, lines) generating the dual cone of the node chart.

    Coordinates are (t_1..t_r, s_1..s_e, x); the monomials t_i, x and
    y = t^k / x generate the chart semigroup, the s_j span torus-factor
    lineality.
    """
    d = model.rank
    rays = [_unit(i, d) for i in range(model.r)]
    rays.append(node_x_exponent(model))
    rays.append(node_y_exponent(model))
    lines = [_unit(model.r + j, d) for j in range(model.extra)]
    return tuple(rays), tuple(lines)


def node_model_cone(model: NodeModel) -> Cone:
    """The cone whose affine toric chart is the binomial node model."""
    rays, lines = node_dual_generators(model)
    sigma_dual = Cone.make(rays, model.rank, lines=lines)
    return dual_cone(sigma_dual)


def branch_involution(model: NodeModel) -> Matrix:
    """The monomial involution exchanging the fiber branches x and y, as a
    matrix on exponent vectors (m -> m @ A); t and s monomials are fixed."""
    d = model.rank
    rows = [list(_unit(i, d)) for i in range(d)]
    rows[d - 1] = list(node_y_exponent(model))
    return tuple(tuple(r) for r in rows)


def branch_involution_rays(model: NodeModel) -> Matrix:
    """The same involution on the ray side (v -> v @ A)."""
    return transpose(branch_involution(model))


@dataclass(frozen=True)
class ChartReport:
    cone: Cone
    center_generator: Vector
    tag: str  # "smooth" | "node" | "double" | "unrecognized"
    exponents: tuple[int, ...]


ChartClassification = tuple[ChartReport, ...]


def _monoid_minimal_gens(gens: list[Vector]) -> list[Vector]:
    """Minimal generating subset of the monoid generated by ``gens``.

    The generators must span a strongly convex cone.  Membership in the
    submonoid generated by the others is decided by bounded search along a
    strictly positive grading.
    """
    gens = sorted(set(gens))
    cone = Cone.make(gens, len(gens[0]))
    grade_rows = dual_cone(cone).rays
    grading = tuple(sum(col) for col in zip(*grade_rows)) if grade_rows else None

    def grade(v) -> int:
        return dot(grading, v)

    def in_monoid(target, pool) -> bool:
        if not any(target):
            return True
        seen = set()
        stack = [target]
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            for h in pool:
                rest = vec_sub(cur, h)
                if not any(rest):
                    return True
                if grade(rest) > 0 and all(
                        dot(row, rest) >= 0 for row in grade_rows):
                    stack.append(rest)
        return False

    kept = list(gens)
    changed = True
    while changed:
        changed = False
        for g in list(kept):
            pool = [h for h in kept if h != g]
            if pool and in_monoid(g, pool):
                kept.remove(g)
                changed = True
                break
    return kept


def classify_binomial_chart(gens: list[Vector]) -> tuple[str, tuple[int, ...]]:
    """Classify a chart ring presented by monoid generators.

    smooth: free monoid (no relation among the minimal generators);
    node:   one relation of shape  a + 2*b = sum l_i * c_i  (x * z^2 = t^l);
    double: one relation of shape      2*b = sum l_i * c_i  (z^2 = t^l).
    The reported exponents are the l_i sorted decreasingly.
    """
    mingens = _monoid_minimal_gens(list(gens))
    relations = kernel_lattice(transpose(tuple(mingens)), len(mingens))
    if not relations:
        return "smooth", ()
    if len(relations) == 1:
        rho = relations[0]
        for r in (rho, tuple(-x for x in rho)):
            pos = sorted(x for x in r if x > 0)
            neg = sorted((-x for x in r if x < 0), reverse=True)
            if pos == [1, 2] and neg:
                return "node", tuple(neg)
            if pos == [2] and neg:
                return "double", tuple(neg)
    return "unrecognized", ()


def separate_branches(model: NodeModel) -> tuple[Fan, ChartClassification]:
    """Blow up the singular scheme V(x, y) of the projection to the base.

    Returns the refined fan and, per chart, the local binomial pattern of
    the (non-normalized) chart ring together with its exponents.
    """
    sigma = node_model_cone(model)
    x_m = node_x_exponent(model)
    y_m = node_y_exponent(model)
    ideal = MonomialIdeal.make([x_m, y_m], model.rank)
    charts = blowup_with_charts(sigma, ideal)
    rays, s_gens = node_dual_generators(model)
    ring_gens = rays + s_gens
    reports = []
    for cone, g in charts:
        local = list(ring_gens) + [vec_sub(h, g) for h in (x_m, y_m) if h != g]
        tag, exps = classify_binomial_chart(local)
        reports.append(ChartReport(cone, g, tag, exps))
    fan = Fan.make([c for c, _ in charts], model.rank)
    return fan, tuple(reports)


def branch_ray_classes(model: NodeModel) -> tuple[tuple[Vector, ...], tuple[Vector, ...]]:
    """Rays of the node chart carrying the fiber branches x = 0 and y = 0.

    After the separating blowup, no output cone may contain rays from both
    classes: the strict transforms of the two branches are disjoint.
    """
    sigma = node_model_cone(model)
    x_m = node_x_exponent(model)
    y_m = node_y_exponent(model)
    x_rays = tuple(r for r in sigma.rays if dot(r, x_m) > 0)
    y_rays = tuple(r for r in sigma.rays if dot(r, y_m) > 0)
    return x_rays, y_rays


def branches_separated(model: NodeModel, fan: Fan) -> bool:
    x_rays, y_rays = branch_ray_classes(model)
    xs, ys = set(x_rays), set(y_rays)
    for c in fan.cones:
        rs = set(c.rays)
        if rs & xs and rs & ys:
            return False
    return True
