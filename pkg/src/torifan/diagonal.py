"""Finite diagonal subgroups of a torus and their monomial characters.

A finite diagonal group is given by generators in (Q/Z)^d, one reduced
fraction in [0, 1) per coordinate.  The group it presents is the subgroup
of (Q/Z)^d generated by these vectors; its order and invariant factors are
computed exactly through the overlattice Z^d + sum Z*g.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm

from .errors import CapacityError, GeometryError
from .lattice import (
    Matrix,
    hermite_normal_form,
    identity,
    smith_normal_form,
    solve_left,
)

QVector = tuple[Fraction, ...]

ENUMERATION_BOUND = 200_000


def qvec(values) -> QVector:
    return tuple(Fraction(x) % 1 for x in values)


def quotient_invariants(overlattice_gens, base_rank: int) -> tuple[int, ...]:
    """Invariant factors (all > 1) of (Z^d + sum Z*g_i) / Z^d.

    The product of the factors is the index of Z^d in the overlattice, which
    is also the order of the subgroup of (Q/Z)^d the generators present.
    """
    gens = [qvec(g) for g in overlattice_gens]
    for g in gens:
        if len(g) != base_rank:
            raise GeometryError("generator rank does not match the base rank")
    if not gens:
        return ()
    denom = 1
    for g in gens:
        for x in g:
            denom = lcm(denom, x.denominator)
    rows = [tuple(int(x * denom) for x in g) for g in gens]
    rows += list(identity(base_rank) if denom == 1 else
                 tuple(tuple(denom * e for e in row) for row in identity(base_rank)))
    h, _ = hermite_normal_form(tuple(rows))
    basis = tuple(row for row in h if any(row))
    # express denom * Z^d in the overlattice basis and read off the quotient
    coords = []
    for row in identity(base_rank):
        x = solve_left(basis, tuple(denom * e for e in row))
        if any(f.denominator != 1 for f in x):
            raise GeometryError("overlattice does not contain the base lattice")
        coords.append(tuple(int(f) for f in x))
    snf = smith_normal_form(tuple(coords))
    return tuple(f for f in snf.invariant_factors if f > 1)


@dataclass(frozen=True)
class Character:
    """A character of a FiniteDiagonalGroup, one Q/Z value per generator."""

    values: QVector

    def __add__(self, other: "Character") -> "Character":
        return Character(tuple((a + b) % 1 for a, b in zip(self.values, other.values)))

    def __neg__(self) -> "Character":
        return Character(tuple((-a) % 1 for a in self.values))

    @property
    def is_trivial(self) -> bool:
        return all(v == 0 for v in self.values)


@dataclass(frozen=True)
class FiniteDiagonalGroup:
    ambient_rank: int
    generators: tuple[QVector, ...]

    @classmethod
    def make(cls, ambient_rank: int, generators) -> "FiniteDiagonalGroup":
        gens = tuple(qvec(g) for g in generators)
        for g in gens:
            if len(g) != ambient_rank:
                raise GeometryError("generator rank does not match the ambient rank")
        return cls(ambient_rank, gens)

    @classmethod
    def trivial(cls, ambient_rank: int) -> "FiniteDiagonalGroup":
        return cls(ambient_rank, ())

    def order(self) -> int:
        out = 1
        for f in quotient_invariants(self.generators, self.ambient_rank):
            out *= f
        return out

    def invariants(self) -> tuple[int, ...]:
        return quotient_invariants(self.generators, self.ambient_rank)

    def generator_orders(self) -> tuple[int, ...]:
        return tuple(lcm(1, *(x.denominator for x in g)) if g else 1
                     for g in self.generators)

    def elements(self, bound: int = ENUMERATION_BOUND) -> tuple[QVector, ...]:
        """All elements of the subgroup of (Q/Z)^d, sorted."""
        elems = {(Fraction(0),) * self.ambient_rank}
        for g in self.generators:
            order = lcm(1, *(x.denominator for x in g)) if g else 1
            new = set()
            for e in elems:
                cur = e
                for _ in range(order):
                    new.add(cur)
                    cur = tuple((a + b) % 1 for a, b in zip(cur, g))
            elems = new
            if len(elems) > bound:
                raise CapacityError(f"group enumeration exceeded {bound} elements")
        return tuple(sorted(elems))

    def contains(self, v) -> bool:
        return qvec(v) in set(self.elements())

    def character(self, exponent) -> Character:
        return monomial_character(exponent, self)

    def is_character(self, values) -> bool:
        """Do the given Q/Z values define a character on this group?

        Checked exactly: the graph group in (Q/Z)^(d+1) must have the same
        order as the group itself, i.e. the values respect every relation
        between the generators (not just their orders).
        """
        vals = qvec(values)
        if len(vals) != len(self.generators):
            return False
        graph = [g + (v,) for g, v in zip(self.generators, vals)]
        graph_group = FiniteDiagonalGroup.make(self.ambient_rank + 1, graph)
        return graph_group.order() == self.order()


def monomial_character(exponent, group: FiniteDiagonalGroup) -> Character:
    """Character of the monomial with the given exponent vector: the pairing
    <m, g> mod 1 on each generator."""
    m = tuple(int(x) for x in exponent)
    if len(m) != group.ambient_rank:
        raise GeometryError("exponent vector rank does not match the group")
    return Character(tuple(
        sum((Fraction(x) * c for x, c in zip(m, g)), Fraction(0)) % 1
        for g in group.generators))


def generating_subset(elements, ambient_rank: int) -> tuple[QVector, ...]:
    """A small generating list for a subgroup given by its full element list."""
    elems = sorted(set(qvec(e) for e in elements))
    gens: list[QVector] = []
    have = {(Fraction(0),) * ambient_rank}
    for e in elems:
        if e in have:
            continue
        gens.append(e)
        order = lcm(1, *(x.denominator for x in e)) if e else 1
        new = set()
        for h in have:
            cur = h
            for _ in range(order):
                new.add(cur)
                cur = tuple((a + b) % 1 for a, b in zip(cur, e))
        have = new
    return tuple(gens)
