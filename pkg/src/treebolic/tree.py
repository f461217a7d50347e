"""The homogeneous tree with p forward branches, in p-adic ball coordinates.

A vertex at level m is the closed ball of radius p**-m in the p-adic line,
identified by its canonical center (digits only at indices < m).  Every
vertex has one predecessor (the ball one level coarser) and p successors.
Levels increase away from the fixed reference end ``omega``; the level is the
Busemann value ``hor``.  Edges are unit intervals, parametrized by an offset
t in (0, 1] measured from the predecessor, so a vertex is the point with
t = 1 on its lower edge.

Confluents (last common points of the rays toward omega) reduce to
valuations of center differences, which makes distances O(1) and exact.
"""

from __future__ import annotations

from .padic import PadicRational


class TreeVertex:
    """Ball (canonical center, level); identity is (level, center)."""

    __slots__ = ("center", "level")

    def __init__(self, center: PadicRational, level: int):
        if not isinstance(level, int):
            raise ValueError("level must be an int")
        object.__setattr__(self, "center", center.ball_center(level))
        object.__setattr__(self, "level", level)

    def __setattr__(self, name, value):
        raise AttributeError("TreeVertex is immutable")

    @classmethod
    def root(cls, p: int) -> "TreeVertex":
        return cls(PadicRational.zero(p), 0)

    @property
    def p(self) -> int:
        return self.center.p

    @property
    def hor(self) -> int:
        return self.level

    def predecessor(self) -> "TreeVertex":
        return TreeVertex(self.center, self.level - 1)

    def successors(self) -> list["TreeVertex"]:
        p, m = self.p, self.level
        if p == 1:
            return [TreeVertex(self.center, m + 1)]
        step = PadicRational(p, 1).shift(m)
        return [TreeVertex(self.center + step * j, m + 1) for j in range(p)]

    def __eq__(self, other):
        if not isinstance(other, TreeVertex):
            return NotImplemented
        return self.level == other.level and self.center == other.center

    def __hash__(self):
        return hash((self.level, self.center))

    def __repr__(self):
        return f"({self.center!r})@{self.level}"


class TreePoint:
    """Point of the metric tree: on the edge below ``upper``, offset in (0,1]."""

    __slots__ = ("upper", "offset")

    def __init__(self, upper: TreeVertex, offset: float):
        if not 0.0 < offset <= 1.0:
            raise ValueError(f"offset must lie in (0, 1], got {offset}")
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "offset", float(offset))

    def __setattr__(self, name, value):
        raise AttributeError("TreePoint is immutable")

    @classmethod
    def at_vertex(cls, v: TreeVertex) -> "TreePoint":
        return cls(v, 1.0)

    @property
    def hor(self) -> float:
        return self.upper.level - 1.0 + self.offset

    @property
    def is_vertex(self) -> bool:
        return self.offset == 1.0

    def __eq__(self, other):
        if not isinstance(other, TreePoint):
            return NotImplemented
        return self.upper == other.upper and self.offset == other.offset

    def __hash__(self):
        return hash((self.upper, self.offset))

    def __repr__(self):
        return f"TreePoint({self.upper!r}, t={self.offset:g})"


class TreeEnd:
    """Boundary point: the reference end omega, or a rational end of the
    p-adic line (the nested balls around a fixed u)."""

    __slots__ = ("value",)

    def __init__(self, value: PadicRational | None = None):
        object.__setattr__(self, "value", value)

    def __setattr__(self, name, value):
        raise AttributeError("TreeEnd is immutable")

    @property
    def is_omega(self) -> bool:
        return self.value is None

    def __eq__(self, other):
        if not isinstance(other, TreeEnd):
            return NotImplemented
        return self.value == other.value

    def __hash__(self):
        return hash(("end", self.value))

    def __repr__(self):
        return "omega" if self.is_omega else f"end({self.value!r})"


OMEGA = TreeEnd()


def confluent(v: TreeVertex, w: TreeVertex) -> TreeVertex:
    """Maximal common ancestor of two vertices with respect to omega."""
    if v.p != w.p:
        raise ValueError("base mismatch")
    j = min(v.level, w.level, (v.center - w.center).valuation())
    # valuation is +inf when the centers agree, so j is always an int here
    return TreeVertex(v.center, int(j))


def _as_point(w: TreeVertex | TreePoint) -> TreePoint:
    return TreePoint.at_vertex(w) if isinstance(w, TreeVertex) else w


def confluent_point(w1: TreeVertex | TreePoint, w2: TreeVertex | TreePoint) -> TreePoint:
    """Confluent of two metric-tree points: where their rays to omega merge."""
    a, b = _as_point(w1), _as_point(w2)
    ua, ub = a.upper, b.upper
    if ua == ub:
        return a if a.offset <= b.offset else b
    c = confluent(ua, ub)
    if c == ua:
        return a
    if c == ub:
        return b
    return TreePoint.at_vertex(c)


def tree_distance(w1: TreeVertex | TreePoint, w2: TreeVertex | TreePoint) -> float:
    """Geodesic length in the metric tree (graph distance on vertices)."""
    a, b = _as_point(w1), _as_point(w2)
    return a.hor + b.hor - 2.0 * confluent_point(a, b).hor


def cone_contains(v: TreeVertex, target: TreeVertex | TreePoint | TreeEnd) -> bool:
    """Whether v lies on the geodesic from omega to ``target``."""
    if isinstance(target, TreeEnd):
        if target.is_omega:
            return False
        return (target.value - v.center).valuation() >= v.level
    if isinstance(target, TreePoint):
        target = target.upper if target.is_vertex else target.upper.predecessor()
    return (
        target.level >= v.level
        and (target.center - v.center).valuation() >= v.level
    )


def boundary_mass(v: TreeVertex) -> float:
    """Mass p**(-hor(v)) of the set of ends whose rays pass through v."""
    return float(v.p) ** (-v.level)
