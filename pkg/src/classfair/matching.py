"""Integral and fractional matching state."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterator, Mapping

from .instance import Instance

FRACTION_TOL = 1e-9


class MatchingError(ValueError):
    pass


class NotAnEdgeError(MatchingError):
    pass


class AgentSaturatedError(MatchingError):
    pass


class ItemAssignedError(MatchingError):
    pass


class OverloadError(MatchingError):
    pass


@dataclass(frozen=True, eq=False)
class Matching:
    """Item-to-agent assignment on a fixed instance.  Treat as immutable."""

    instance: Instance
    assignment: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "assignment", MappingProxyType(dict(self.assignment)))

    @classmethod
    def empty(cls, inst: Instance) -> "Matching":
        return cls(inst, {})

    @classmethod
    def from_assignment(cls, inst: Instance, assignment: Mapping[int, int]) -> "Matching":
        """Validate and wrap a complete item -> agent map."""
        used: set[int] = set()
        for o, a in assignment.items():
            if not 0 <= o < inst.num_items:
                raise MatchingError(f"item {o} is not in the instance")
            if not inst.has_edge(a, o):
                raise NotAnEdgeError(f"agent {a} is not adjacent to item {o}")
            if a in used:
                raise AgentSaturatedError(f"agent {a} is matched twice")
            used.add(a)
        return cls(inst, assignment)

    def __eq__(self, other):
        if not isinstance(other, Matching):
            return NotImplemented
        return self.instance is other.instance and dict(self.assignment) == dict(other.assignment)

    def __len__(self) -> int:
        return len(self.assignment)

    @property
    def size(self) -> int:
        return len(self.assignment)

    @property
    def matched_agents(self) -> frozenset[int]:
        return frozenset(self.assignment.values())

    def is_saturated(self, agent: int) -> bool:
        return agent in self.matched_agents

    def agent_of(self, item: int) -> int | None:
        return self.assignment.get(item)

    def bundle(self, class_id: int) -> tuple[int, ...]:
        """``Y_i``: items matched into class ``class_id``, in arrival order."""
        cls = self.instance.agent_class
        return tuple(sorted(o for o, a in self.assignment.items() if cls[a] == class_id))

    def bundles(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.instance.num_classes)]
        cls = self.instance.agent_class
        for o in sorted(self.assignment):
            out[cls[self.assignment[o]]].append(o)
        return tuple(tuple(b) for b in out)

    def class_counts(self) -> tuple[int, ...]:
        counts = [0] * self.instance.num_classes
        cls = self.instance.agent_class
        for a in self.assignment.values():
            counts[cls[a]] += 1
        return tuple(counts)

    def key(self) -> tuple[int, ...]:
        """Assignment as a per-item tuple; unmatched items encode as ``num_agents``."""
        unmatched = self.instance.num_agents
        return tuple(self.assignment.get(o, unmatched) for o in range(self.instance.num_items))


def assign(m: Matching, item: int, agent: int) -> Matching:
    inst = m.instance
    if not 0 <= item < inst.num_items:
        raise MatchingError(f"item {item} is not in the instance")
    if not inst.has_edge(agent, item):
        raise NotAnEdgeError(f"agent {agent} is not adjacent to item {item}")
    if item in m.assignment:
        raise ItemAssignedError(f"item {item} is already assigned to agent {m.assignment[item]}")
    if agent in m.matched_agents:
        raise AgentSaturatedError(f"agent {agent} is already saturated")
    new = dict(m.assignment)
    new[item] = agent
    return Matching(inst, new)


def is_nonwasteful(inst: Instance, m: Matching) -> bool:
    """True iff no edge joins an unsaturated agent and an unassigned item."""
    matched = m.matched_agents
    for o, nb in enumerate(inst.neighbors):
        if o in m.assignment:
            continue
        for a in nb:
            if a not in matched:
                return False
    return True


# -- fractional ------------------------------------------------------------


class _RunLoads:
    """Piecewise-constant agent loads over the agent index line.

    ``starts[r]`` is the first agent of run ``r``; the run extends to the next
    start.  Range updates touch only the runs they cover, which keeps the
    nested-prefix shares of the divisible strategy cheap at large ``n``.
    """

    __slots__ = ("starts", "vals", "n")

    def __init__(self, n: int):
        self.n = n
        self.starts = [0] if n else []
        self.vals = [0.0] if n else []

    def copy(self) -> "_RunLoads":
        c = _RunLoads.__new__(_RunLoads)
        c.n, c.starts, c.vals = self.n, list(self.starts), list(self.vals)
        return c

    def _split(self, x: int) -> int:
        """Ensure a run starts at ``x``; return its index."""
        if x >= self.n:
            return len(self.starts)
        r = bisect.bisect_right(self.starts, x) - 1
        if self.starts[r] == x:
            return r
        self.starts.insert(r + 1, x)
        self.vals.insert(r + 1, self.vals[r])
        return r + 1

    def runs(self, lo: int, hi: int) -> Iterator[tuple[int, int, float]]:
        if lo >= hi:
            return
        r = bisect.bisect_right(self.starts, lo) - 1
        while r < len(self.starts) and self.starts[r] < hi:
            s = max(self.starts[r], lo)
            e = self.starts[r + 1] if r + 1 < len(self.starts) else self.n
            yield s, min(e, hi), self.vals[r]
            r += 1

    def max(self, lo: int, hi: int) -> float:
        return max((v for _, _, v in self.runs(lo, hi)), default=0.0)

    def add(self, lo: int, hi: int, delta: float) -> None:
        a = self._split(lo)
        b = self._split(hi)
        for r in range(a, b):
            self.vals[r] += delta

    def get(self, x: int) -> float:
        return self.vals[bisect.bisect_right(self.starts, x) - 1]


@dataclass(frozen=True)
class Share:
    """Mass ``each`` given to every agent in ``range(lo, hi)`` from ``item``."""

    item: int
    lo: int
    hi: int
    each: float

    @property
    def total(self) -> float:
        return self.each * (self.hi - self.lo)


class FractionalMatching:
    """Divisible assignment.

    Mass is recorded as :class:`Share` blocks over contiguous agent ranges
    (single agents are ranges of length one).  Every agent in a block must be
    adjacent to the block's item.  ``cells()`` expands blocks into the sparse
    ``(agent, item) -> fraction`` view.
    """

    def __init__(self, inst: Instance):
        self.instance = inst
        self.shares: list[Share] = []
        self._agent = _RunLoads(inst.num_agents)
        self._item_load = [0.0] * inst.num_items
        self._item_shares: dict[int, list[Share]] = {}

    def copy(self) -> "FractionalMatching":
        c = FractionalMatching.__new__(FractionalMatching)
        c.instance = self.instance
        c.shares = list(self.shares)
        c._agent = self._agent.copy()
        c._item_load = list(self._item_load)
        c._item_shares = {o: list(s) for o, s in self._item_shares.items()}
        return c

    def agent_load(self, agent: int) -> float:
        return self._agent.get(agent)

    def item_load(self, item: int) -> float:
        return self._item_load[item]

    def max_load(self, lo: int, hi: int) -> float:
        return self._agent.max(lo, hi)

    def load_runs(self, lo: int = 0, hi: int | None = None) -> Iterator[tuple[int, int, float]]:
        """Maximal ``(lo, hi, load)`` runs of equal agent load."""
        return self._agent.runs(lo, self.instance.num_agents if hi is None else hi)

    def cell(self, agent: int, item: int) -> float:
        return sum(s.each for s in self._item_shares.get(item, ()) if s.lo <= agent < s.hi)

    def cells(self) -> dict[tuple[int, int], float]:
        out: dict[tuple[int, int], float] = {}
        for s in self.shares:
            for a in range(s.lo, s.hi):
                out[(a, s.item)] = out.get((a, s.item), 0.0) + s.each
        return out

    def add_range(self, item: int, lo: int, hi: int, each: float) -> None:
        """Give ``each`` to every agent in ``range(lo, hi)``; mutates in place."""
        inst = self.instance
        if not 0 <= item < inst.num_items:
            raise MatchingError(f"item {item} is not in the instance")
        if lo >= hi or each == 0:
            return
        if each < 0:
            raise MatchingError("shares must be nonnegative")
        if not inst.covers(item, lo, hi):
            raise NotAnEdgeError(f"agents {lo}..{hi - 1} are not all adjacent to item {item}")
        total = each * (hi - lo)
        if self._item_load[item] + total > 1 + FRACTION_TOL:
            raise OverloadError(f"item {item} would carry {self._item_load[item] + total:.12g} > 1")
        if self._agent.max(lo, hi) + each > 1 + FRACTION_TOL:
            raise OverloadError(f"an agent in {lo}..{hi - 1} would exceed load 1")
        self._agent.add(lo, hi, each)
        self._item_load[item] += total
        share = Share(item, lo, hi, each)
        self.shares.append(share)
        self._item_shares.setdefault(item, []).append(share)

    def add(self, item: int, shares: Mapping[int, float]) -> None:
        """Per-agent shares for one item; mutates in place, validated as a whole."""
        inst = self.instance
        if not 0 <= item < inst.num_items:
            raise MatchingError(f"item {item} is not in the instance")
        for a, f in shares.items():
            if f < 0:
                raise MatchingError("shares must be nonnegative")
            if f > 0 and not inst.has_edge(a, item):
                raise NotAnEdgeError(f"agent {a} is not adjacent to item {item}")
            if self.agent_load(a) + f > 1 + FRACTION_TOL:
                raise OverloadError(f"agent {a} would exceed load 1")
        if self._item_load[item] + sum(shares.values()) > 1 + FRACTION_TOL:
            raise OverloadError(f"item {item} would exceed load 1")
        for a, f in sorted(shares.items()):
            if f > 0:
                self.add_range(item, a, a + 1, f)


def frac_assign(m: FractionalMatching, item: int, shares: Mapping[int, float]) -> FractionalMatching:
    """Persistent variant of :meth:`FractionalMatching.add`."""
    out = m.copy()
    out.add(item, shares)
    return out


def class_loads(inst: Instance, m: FractionalMatching) -> tuple[float, ...]:
    """Total matched mass on each class."""
    cls = inst.agent_class
    loads = [0.0] * inst.num_classes
    for lo, hi, v in m.load_runs():
        if v == 0:
            continue
        if cls[lo] == cls[hi - 1] and _single_class(inst, lo, hi):
            loads[cls[lo]] += v * (hi - lo)
        else:
            for a in range(lo, hi):
                loads[cls[a]] += v
    return tuple(loads)


def _single_class(inst: Instance, lo: int, hi: int) -> bool:
    members = inst.class_agents[inst.agent_class[lo]]
    i = bisect.bisect_left(members, lo)
    return i + (hi - lo) <= len(members) and members[i + (hi - lo) - 1] == hi - 1
