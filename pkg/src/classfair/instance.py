"""Bipartite instances with a class partition over agents and an item arrival order.

Agents and items are identified by contiguous 0-based integers.  The order of
``Instance.neighbors`` is the arrival order of the items.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from functools import cached_property
from itertools import chain
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np


class InstanceError(ValueError):
    """Raised when an instance violates a structural invariant."""


class Span(Sequence[int]):
    """Ascending union of disjoint integer ranges, used as a compact neighbor list.

    Behaves like the tuple of its elements for iteration, indexing, ``len`` and
    equality, but membership and range-cover tests cost O(#ranges).
    """

    __slots__ = ("ranges", "_len")

    def __init__(self, *ranges: range):
        rs = tuple(r for r in ranges if len(r))
        for r in rs:
            if r.step != 1:
                raise InstanceError("span ranges must have unit step")
        for a, b in zip(rs, rs[1:]):
            if b.start < a.stop:
                raise InstanceError("span ranges must be ascending and disjoint")
        self.ranges = rs
        self._len = sum(len(r) for r in rs)

    def __len__(self) -> int:
        return self._len

    def __iter__(self) -> Iterator[int]:
        return chain.from_iterable(self.ranges)

    def __contains__(self, x) -> bool:
        return any(x in r for r in self.ranges)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return tuple(self)[idx]
        if idx < 0:
            idx += self._len
        if not 0 <= idx < self._len:
            raise IndexError(idx)
        for r in self.ranges:
            if idx < len(r):
                return r[idx]
            idx -= len(r)
        raise IndexError(idx)

    def __eq__(self, other):
        if isinstance(other, Span):
            return self.ranges == other.ranges
        if isinstance(other, (tuple, list)):
            return self._len == len(other) and all(a == b for a, b in zip(self, other))
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self))

    def __repr__(self):
        return f"Span({', '.join(f'range({r.start}, {r.stop})' for r in self.ranges)})"

    def covers(self, lo: int, hi: int) -> bool:
        return any(r.start <= lo and hi <= r.stop for r in self.ranges)

    def to_array(self) -> np.ndarray:
        if not self.ranges:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.arange(r.start, r.stop, dtype=np.int64) for r in self.ranges])


@dataclass(frozen=True, eq=False)
class Instance:
    num_classes: int
    agent_class: tuple[int, ...]
    neighbors: tuple[tuple[int, ...], ...]
    name: str = ""
    _validated: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        if not self._validated:
            _validate(self.num_classes, self.agent_class, self.neighbors)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.num_classes == other.num_classes
            and self.agent_class == other.agent_class
            and self.name == other.name
            and len(self.neighbors) == len(other.neighbors)
            and all(_same(a, b) for a, b in zip(self.neighbors, other.neighbors))
        )

    def __hash__(self):
        return hash((self.num_classes, self.agent_class, self.num_items, self.name))

    @property
    def num_agents(self) -> int:
        return len(self.agent_class)

    @property
    def num_items(self) -> int:
        return len(self.neighbors)

    @property
    def agents(self) -> list[tuple[int, int]]:
        return list(enumerate(self.agent_class))

    @property
    def items(self) -> list[tuple[int, tuple[int, ...]]]:
        return list(enumerate(self.neighbors))

    @property
    def num_edges(self) -> int:
        return sum(len(nb) for nb in self.neighbors)

    def degree(self, item: int) -> int:
        return len(self.neighbors[item])

    def has_edge(self, agent: int, item: int) -> bool:
        return agent in self._neighbor_sets[item]

    def covers(self, item: int, lo: int, hi: int) -> bool:
        """True iff every agent in ``range(lo, hi)`` is adjacent to ``item``."""
        nb = self.neighbors[item]
        if isinstance(nb, Span):
            return nb.covers(lo, hi)
        s = self._neighbor_sets[item]
        return all(a in s for a in range(lo, hi))

    @cached_property
    def _neighbor_sets(self) -> tuple:
        return tuple(nb if isinstance(nb, Span) else frozenset(nb) for nb in self.neighbors)

    @cached_property
    def class_agents(self) -> tuple[tuple[int, ...], ...]:
        """Agent ids of each class, ascending."""
        out: list[list[int]] = [[] for _ in range(self.num_classes)]
        for a, c in enumerate(self.agent_class):
            out[c].append(a)
        return tuple(tuple(x) for x in out)

    @cached_property
    def class_neighbor_arrays(self) -> tuple[tuple[np.ndarray, ...], ...]:
        """``class_neighbor_arrays[o][i]``: neighbors of item ``o`` in class ``i`` (input order)."""
        k = self.num_classes
        cls = np.asarray(self.agent_class, dtype=np.int64)
        out = []
        for nb in self.neighbors:
            arr = nb.to_array() if isinstance(nb, Span) else np.asarray(nb, dtype=np.int64)
            if k == 1:
                out.append((arr,))
                continue
            c = cls[arr]
            out.append(tuple(arr[c == i] for i in range(k)))
        return tuple(out)

    @cached_property
    def class_neighbors(self) -> tuple[tuple[tuple[int, ...], ...], ...]:
        """``class_neighbors[o][i]``: neighbors of item ``o`` in class ``i`` (input order)."""
        return tuple(
            tuple(tuple(a.tolist()) for a in per_class) for per_class in self.class_neighbor_arrays
        )

    @cached_property
    def agent_items(self) -> tuple[tuple[int, ...], ...]:
        """Items adjacent to each agent, in arrival order."""
        out: list[list[int]] = [[] for _ in range(self.num_agents)]
        for o, nb in enumerate(self.neighbors):
            for a in nb:
                out[a].append(o)
        return tuple(tuple(x) for x in out)

    @cached_property
    def last_item_of_agent(self) -> np.ndarray:
        """Index of the last arriving item adjacent to each agent, ``-1`` if none."""
        last = np.full(self.num_agents, -1, dtype=np.int64)
        for o, nb in enumerate(self.neighbors):
            if isinstance(nb, Span):
                for r in nb.ranges:
                    last[r.start:r.stop] = o
            elif nb:
                last[list(nb)] = o
        return last

    def class_of(self, agent: int) -> int:
        return self.agent_class[agent]

    def class_sizes(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.class_agents)

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "num_classes": self.num_classes,
            "agents": [{"id": a, "class": c} for a, c in enumerate(self.agent_class)],
            "items": [{"id": o, "neighbors": list(nb)} for o, nb in enumerate(self.neighbors)],
        }

    def to_json(self) -> str:
        """Canonical text form: one agent or item record per line."""
        d = self.to_dict()
        agents = ",\n".join("    " + json.dumps(r) for r in d["agents"])
        items = ",\n".join("    " + json.dumps(r) for r in d["items"])
        return (
            "{\n"
            f'  "name": {json.dumps(d["name"])},\n'
            f'  "num_classes": {d["num_classes"]},\n'
            f'  "agents": [\n{agents}\n  ],\n'
            f'  "items": [\n{items}\n  ]\n'
            "}\n"
        )

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        try:
            k = data["num_classes"]
            agents = data["agents"]
            items = data["items"]
            name = data.get("name", "")
        except (KeyError, TypeError) as exc:
            raise InstanceError(f"malformed instance document: {exc}") from exc
        if not isinstance(k, int) or isinstance(k, bool):
            raise InstanceError("num_classes must be an integer")
        classes = []
        for pos, rec in enumerate(agents):
            if rec.get("id") != pos:
                raise InstanceError(f"agent id {rec.get('id')!r} at position {pos}: ids must be contiguous from 0")
            classes.append(rec.get("class"))
        nbs = []
        for pos, rec in enumerate(items):
            if rec.get("id") != pos:
                raise InstanceError(f"item id {rec.get('id')!r} at position {pos}: ids must be contiguous from 0")
            nbs.append(rec.get("neighbors"))
        return make_instance(k, classes, nbs, name=name)

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def _same(a, b) -> bool:
    if isinstance(a, Span) or isinstance(b, Span):
        return a == b if isinstance(a, Span) else b == a
    return tuple(a) == tuple(b)


def _validate(k, agent_class, neighbors) -> None:
    if not isinstance(k, int) or k < 1:
        raise InstanceError(f"num_classes must be a positive integer, got {k!r}")
    counts = [0] * k
    for a, c in enumerate(agent_class):
        if not isinstance(c, int) or isinstance(c, bool) or not 0 <= c < k:
            raise InstanceError(f"agent {a}: class {c!r} out of range [0, {k})")
        counts[c] += 1
    for c, cnt in enumerate(counts):
        if cnt == 0:
            raise InstanceError(f"class {c} has no agents")
    n = len(agent_class)
    for o, nb in enumerate(neighbors):
        if nb is None:
            raise InstanceError(f"item {o}: missing neighbor list")
        if isinstance(nb, Span):
            if nb.ranges and (nb.ranges[0].start < 0 or nb.ranges[-1].stop > n):
                raise InstanceError(f"item {o}: neighbor range exceeds agent ids [0, {n})")
            continue
        seen = set()
        for a in nb:
            if not isinstance(a, int) or isinstance(a, bool) or not 0 <= a < n:
                raise InstanceError(f"item {o}: neighbor {a!r} is not a valid agent id")
            if a in seen:
                raise InstanceError(f"item {o}: duplicate neighbor {a}")
            seen.add(a)


def make_instance(
    k: int,
    agents: Sequence[int],
    items: Sequence[Sequence[int]],
    name: str = "",
) -> Instance:
    """Build a validated instance.

    ``agents[a]`` is the class of agent ``a``; ``items[o]`` lists the agents
    adjacent to item ``o``.  Items arrive in list order.
    """
    agent_class = tuple(agents)
    if any(nb is None for nb in items):
        bad = next(o for o, nb in enumerate(items) if nb is None)
        raise InstanceError(f"item {bad}: missing neighbor list")
    neighbors = tuple(nb if isinstance(nb, Span) else tuple(nb) for nb in items)
    _validate(k, agent_class, neighbors)
    return Instance(k, agent_class, neighbors, name, _validated=True)


def load_instance(path: str | Path) -> Instance:
    return Instance.from_json(Path(path).read_text())


def save_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(inst.to_json())


# -- generators -----------------------------------------------------------


def _require_positive(**kw) -> None:
    for key, val in kw.items():
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise InstanceError(f"{key} must be a positive integer, got {val!r}")


def gen_upper_triangular(n: int) -> Instance:
    """One class of ``n`` agents; item ``t`` is adjacent to agents ``t..n-1``."""
    _require_positive(n=n)
    items = [Span(range(t, n)) for t in range(n)]
    return make_instance(1, [0] * n, items, name=f"upper_triangular(n={n})")


def gen_cef_impossibility(n: int) -> Instance:
    """Upper-triangular class 0 (agents ``0..n-1``) plus a class 1 whose agent
    ``n+t`` is adjacent to item ``t`` only."""
    _require_positive(n=n)
    items = [Span(range(t, n), range(n + t, n + t + 1)) for t in range(n)]
    return make_instance(2, [0] * n + [1] * n, items, name=f"cef_impossibility(n={n})")


def gen_divisible_hardness(n: int) -> Instance:
    """Two classes of ``n`` agents and ``2n`` items arriving in pairs.

    Pair ``p`` (0-based) is adjacent to class-0 agents ``0..n-1-p``, i.e. each
    pair drops the highest-indexed remaining agent.  Every item is adjacent to
    all class-1 agents ``n..2n-1``.
    """
    _require_positive(n=n)
    items = []
    for p in range(n):
        nb = Span(range(0, n - p), range(n, 2 * n))
        items.append(nb)
        items.append(nb)
    return make_instance(2, [0] * n + [1] * n, items, name=f"divisible_hardness(n={n})")


def gen_price_of_fairness(k: int, p: int, q: int) -> Instance:
    """Classes ``0..k-2`` with ``q`` agents each and class ``k-1`` with ``q(k-1)``.

    Phase one: ``p(k-1)+q`` items adjacent to every agent.  Phase two: for each
    class ``i < k-1`` in order, ``q`` items adjacent to the agents of class ``i``.
    """
    if not isinstance(k, int) or isinstance(k, bool) or k < 2:
        raise InstanceError(f"k must be an integer >= 2, got {k!r}")
    _require_positive(p=p, q=q)
    classes = []
    for i in range(k - 1):
        classes += [i] * q
    classes += [k - 1] * (q * (k - 1))
    everyone = Span(range(len(classes)))
    items = [everyone] * (p * (k - 1) + q)
    for i in range(k - 1):
        items += [Span(range(i * q, (i + 1) * q))] * q
    return make_instance(k, classes, items, name=f"price_of_fairness(k={k},p={p},q={q})")


def gen_cnsw_counterexample() -> Instance:
    """Two classes ``a1..a4`` (agents 0-3) and ``b1..b4`` (agents 4-7), six items.

    Items 0-3 are adjacent to every ``b``; item 0 also to ``a1``; items 4 and 5
    are adjacent to ``a3`` and ``a4``.
    """
    b = [4, 5, 6, 7]
    items = [[0] + b, list(b), list(b), list(b), [2, 3], [2, 3]]
    return make_instance(2, [0, 0, 0, 0, 1, 1, 1, 1], items, name="cnsw_counterexample")


def gen_random_bipartite(
    k: int,
    agents_per_class: int | Sequence[int],
    num_items: int,
    edge_prob: float,
    seed: int,
) -> Instance:
    """Erdos-Renyi style bipartite instance; items with no neighbors are kept."""
    _require_positive(k=k, num_items=num_items)
    if isinstance(agents_per_class, int):
        sizes = [agents_per_class] * k
    else:
        sizes = list(agents_per_class)
        if len(sizes) != k:
            raise InstanceError(f"agents_per_class has {len(sizes)} entries, expected {k}")
    for s in sizes:
        _require_positive(agents_per_class=s)
    if not 0.0 <= edge_prob <= 1.0:
        raise InstanceError(f"edge_prob must lie in [0, 1], got {edge_prob!r}")
    rng = random.Random(seed)
    classes = [c for c, s in enumerate(sizes) for _ in range(s)]
    n = len(classes)
    items = [[a for a in range(n) if rng.random() < edge_prob] for _ in range(num_items)]
    name = f"random(k={k},sizes={sizes},m={num_items},p={edge_prob},seed={seed})"
    return make_instance(k, classes, items, name=name)


GENERATORS = {
    "upper_triangular": gen_upper_triangular,
    "cef_impossibility": gen_cef_impossibility,
    "divisible_hardness": gen_divisible_hardness,
    "price_of_fairness": gen_price_of_fairness,
    "cnsw_counterexample": gen_cnsw_counterexample,
    "random_bipartite": gen_random_bipartite,
}
