"""Bracket engines and relation tables.

Two engines compute the same kind of object.  The canonical engine realizes
generators as functions on special-relativistic phase space and differentiates
through the metric (-,+,+,+).  The structure-table engine expands a bracket
from declared generator relations by bilinearity, Leibniz, and the chain rule,
never consulting a realization.  Every claimed commutator block in the
verification catalog is stored with the overall factor i stripped, so both
engines work entirely over exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from . import vars as V
from . import ratfunc as R
from .ratfunc import KpalgError, RatFunc

METRIC = (-1, 1, 1, 1)  # eta_00 = -1; rotations and boosts follow from it

EPS = {
    (1, 2, 3): 1, (2, 3, 1): 1, (3, 1, 2): 1,
    (3, 2, 1): -1, (1, 3, 2): -1, (2, 1, 3): -1,
}


def epsilon(i: int, j: int, k: int) -> int:
    return EPS.get((i, j, k), 0)


class MissingRelationError(KpalgError):
    pass


class DuplicateRelationError(KpalgError):
    pass


def poisson(a, b) -> RatFunc:
    """Canonical Poisson bracket on SR phase space.

    {x_mu, p_nu} = eta_mu_nu; commutators are recovered as [A,B] = i{A,B}.
    """
    a = R.as_ratfunc(a) if not isinstance(a, RatFunc) else a
    b = R.as_ratfunc(b) if not isinstance(b, RatFunc) else b
    total = R.ZERO
    free = a.free_vars() | b.free_vars()
    for mu in range(4):
        xv, pv = V.X[mu], V.P[mu]
        if xv not in free and pv not in free:
            continue
        da_x = R.diff(a, xv)
        db_x = R.diff(b, xv)
        da_p = R.diff(a, pv)
        db_p = R.diff(b, pv)
        term = da_x * db_p - db_x * da_p
        if not term.is_zero():
            total = total + term * METRIC[mu]
    return total


@dataclass(frozen=True)
class Relation:
    left: str
    right: str
    rhs: RatFunc
    tag: str = ""
    note: str = ""


class RelationTable:
    """Antisymmetric store of bracket relations over named generators.

    Relations are kept with left before right in declared generator order;
    reversed queries negate, so a pair can never be entered twice with
    inconsistent values.
    """

    def __init__(self, name: str, generators: Iterable[str]):
        self.name = name
        self.generators = tuple(generators)
        self._order = {g: i for i, g in enumerate(self.generators)}
        self.entries: list[Relation] = []
        self._index: dict = {}
        for g in self.generators:
            V.register_base(g)

    def add(self, left: str, right: str, rhs, tag: str = "", note: str = ""):
        rhs = R.as_ratfunc(rhs) if not isinstance(rhs, RatFunc) else rhs
        if left not in self._order or right not in self._order:
            missing = left if left not in self._order else right
            raise MissingRelationError(f"generator '{missing}' not declared in table {self.name}")
        for vid in rhs.free_vars():
            nm = V.name_of(vid)
            if V.kind_of(vid) == V.BASE and nm not in self._order \
                    and nm not in ("kappa", "kappabar", "m"):
                raise MissingRelationError(
                    f"relation ({left},{right}) uses undeclared symbol '{nm}'")
        if self._order[left] > self._order[right] or left == right:
            left, right, rhs = right, left, -rhs
        if (left, right) in self._index:
            raise DuplicateRelationError(f"relation ({left},{right}) already declared")
        rel = Relation(left, right, rhs, tag, note)
        self._index[(left, right)] = rel
        self.entries.append(rel)

    def lookup(self, a: str, b: str) -> Optional[RatFunc]:
        if a == b:
            return R.ZERO
        rel = self._index.get((a, b))
        if rel is not None:
            return rel.rhs
        rel = self._index.get((b, a))
        if rel is not None:
            return -rel.rhs
        return None

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def renamed(self, name: str, rename: dict, value_map: Callable[[RatFunc], RatFunc]):
        """Image table under a generator renaming and an rhs transformation."""
        out = RelationTable(name, tuple(rename.get(g, g) for g in self.generators))
        for rel in self.entries:
            out.add(rename.get(rel.left, rel.left), rename.get(rel.right, rel.right),
                    value_map(rel.rhs), rel.tag, rel.note)
        return out


@dataclass
class AbstractAlgebra:
    """Generator algebra with declared relations and a commuting subalgebra.

    Coefficient functions may depend only on the commuting generators, which
    is what makes the chain rule unambiguous.
    """

    name: str
    table: RelationTable
    commuting: tuple = ()

    def __post_init__(self):
        self._gen_vids = {g: V.register_base(g) for g in self.table.generators}
        self._commuting = set(self.commuting)

    def generators(self):
        return self.table.generators

    def bracket(self, a, b) -> RatFunc:
        """Structure bracket extended by bilinearity, Leibniz, and chain rule."""
        a = R.as_ratfunc(a) if not isinstance(a, RatFunc) else a
        b = R.as_ratfunc(b) if not isinstance(b, RatFunc) else b
        free_a = a.free_vars()
        free_b = b.free_vars()
        da: dict = {}
        db: dict = {}
        for g, vid in self._gen_vids.items():
            if vid in free_a:
                d = R.diff(a, vid)
                if not d.is_zero():
                    da[g] = d
            if vid in free_b:
                d = R.diff(b, vid)
                if not d.is_zero():
                    db[g] = d
        total = R.ZERO
        for ga, dva in da.items():
            for gb, dvb in db.items():
                rhs = self.table.lookup(ga, gb)
                if rhs is None:
                    if ga in self._commuting and gb in self._commuting:
                        continue
                    raise MissingRelationError(
                        f"no relation for ({ga},{gb}) in table {self.table.name}")
                if rhs.is_zero():
                    continue
                total = total + dva * dvb * rhs
        return total


def jacobiator(bracket: Callable[[RatFunc, RatFunc], RatFunc], a, b, c) -> RatFunc:
    """{a,{b,c}} + {b,{c,a}} + {c,{a,b}}, identically zero for any Poisson bracket."""
    return (bracket(a, bracket(b, c))
            + bracket(b, bracket(c, a))
            + bracket(c, bracket(a, b)))


@dataclass
class TableCheck:
    relation: Relation
    computed: RatFunc
    claimed: RatFunc


def realize(rf: RatFunc, realization: dict) -> RatFunc:
    """Substitute generator symbols by their phase-space realizations."""
    mapping = {}
    for name, value in realization.items():
        vid = V.maybe_lookup(name)
        if vid is not None:
            mapping[vid] = value
    return R.subst(rf, mapping)


def table_checks(realization: dict, table: RelationTable) -> list:
    """Poisson-engine evaluation of every table entry against its claim."""
    out = []
    for rel in table:
        if rel.left not in realization or rel.right not in realization:
            raise MissingRelationError(
                f"no realization for generator in ({rel.left},{rel.right})")
        lhs = poisson(realization[rel.left], realization[rel.right])
        rhs = realize(rel.rhs, realization)
        out.append(TableCheck(rel, lhs, rhs))
    return out
