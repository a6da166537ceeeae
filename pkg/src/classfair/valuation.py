"""Class valuations and fairness metrics.

The optimistic value of a bundle for class ``i`` is the size of a maximum
matching between the agents of class ``i`` and the bundle's items.  Everything
else here (envy ratios, CEF1, proportional shares, class Nash welfare) is built
on that quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from ._bipartite import hopcroft_karp, max_matching_size
from .instance import Instance
from .matching import Matching, is_nonwasteful

PROP_ITEM_CAP = 10
PROP_CLASS_CAP = 4
CMNW_ITEM_CAP = 8


class OracleCapError(ValueError):
    """The instance is too large for an exhaustive oracle."""


@dataclass(frozen=True)
class Bundle:
    """Items viewed as a bundle.  ``dummies`` are copies of already-arrived
    items; they match like their originals and may repeat."""

    items: tuple[int, ...] = ()
    dummies: tuple[int, ...] = ()

    def __iter__(self):
        yield from self.items
        yield from self.dummies

    def __len__(self) -> int:
        return len(self.items) + len(self.dummies)


def _check_class(inst: Instance, class_id: int) -> None:
    if not isinstance(class_id, int) or not 0 <= class_id < inst.num_classes:
        raise ValueError(f"class {class_id!r} out of range [0, {inst.num_classes})")


def optimistic_value(inst: Instance, class_id: int, bundle: Bundle | Iterable[int]) -> int:
    """Maximum matching size between class ``class_id`` and the bundle's items."""
    _check_class(inst, class_id)
    cn = inst.class_neighbors
    adj = [cn[o][class_id] for o in bundle]
    if not adj:
        return 0
    return max_matching_size(adj)


def exhaustive_matching_size(inst: Instance, class_id: int, items: Sequence[int]) -> int:
    """Reference matcher: tries every way of matching or skipping each item.

    Exponential; intended for bundles of a handful of items.
    """
    nbs = [inst.class_neighbors[o][class_id] for o in items]
    used: set[int] = set()

    def go(pos: int) -> int:
        if pos == len(nbs):
            return 0
        best = go(pos + 1)
        for a in nbs[pos]:
            if a not in used:
                used.add(a)
                best = max(best, 1 + go(pos + 1))
                used.discard(a)
        return best

    return go(0)


def class_value(inst: Instance, m: Matching, class_id: int) -> int:
    _check_class(inst, class_id)
    return m.class_counts()[class_id]


@dataclass(frozen=True)
class CefPair:
    v_i: int
    v_star: int

    @property
    def satisfied(self) -> bool:
        """Envy toward a bundle worth nothing holds for every ratio."""
        return self.v_star == 0

    @property
    def ratio(self) -> Fraction | None:
        return None if self.v_star == 0 else Fraction(self.v_i, self.v_star)

    def to_dict(self) -> dict:
        r = self.ratio
        return {
            "v_i": self.v_i,
            "v_star": self.v_star,
            "ratio": "SATISFIED" if r is None else float(r),
        }


@dataclass(frozen=True)
class CefReport:
    pairs: dict[tuple[int, int], CefPair]
    alpha: Fraction


def cef_report(inst: Instance, m: Matching) -> CefReport:
    k = inst.num_classes
    bundles = m.bundles()
    values = m.class_counts()
    pairs = {}
    alpha = Fraction(1)
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            pair = CefPair(values[i], optimistic_value(inst, i, bundles[j]))
            pairs[(i, j)] = pair
            if pair.ratio is not None and pair.ratio < alpha:
                alpha = pair.ratio
    return CefReport(pairs, alpha)


def cef1_check(inst: Instance, m: Matching) -> bool:
    k = inst.num_classes
    bundles = m.bundles()
    values = m.class_counts()
    for i in range(k):
        for j in range(k):
            if i == j or not bundles[j]:
                continue
            yj = bundles[j]
            if optimistic_value(inst, i, yj) <= values[i]:
                continue
            if not any(
                optimistic_value(inst, i, yj[:r] + yj[r + 1:]) <= values[i] for r in range(len(yj))
            ):
                return False
    return True


def cnsw_from_values(values: Sequence[int]) -> float:
    prod = math.prod(values)
    if prod == 0:
        return 0.0
    root = round(prod ** (1 / len(values)))
    if root ** len(values) == prod:
        return float(root)
    return prod ** (1 / len(values))


def cnsw(inst: Instance, m: Matching) -> float:
    """Geometric mean of the class values."""
    return cnsw_from_values(m.class_counts())


def usw_opt(inst: Instance) -> int:
    """Size of a maximum matching of the whole instance."""
    return max_matching_size(inst.neighbors)


# -- proportional share --------------------------------------------------


@dataclass(frozen=True)
class PropResult:
    class_id: int
    value: int
    upper_bound: float
    divisible_gap: bool
    """True when the integral optimum falls below the divisible upper bound,
    i.e. a divisible matching might do better."""

    def to_dict(self) -> dict:
        return {
            "class": self.class_id,
            "prop": self.value,
            "divisible_upper_bound": self.upper_bound,
            "divisible_gap": self.divisible_gap,
        }


def _augment(nbs_of, match_right: dict, left: int, seen: set) -> bool:
    for a in nbs_of(left):
        if a in seen:
            continue
        seen.add(a)
        w = match_right.get(a)
        if w is None or _augment(nbs_of, match_right, w, seen):
            match_right[a] = left
            return True
    return False


def prop_share_oracle(
    inst: Instance,
    class_id: int,
    item_cap: int = PROP_ITEM_CAP,
    class_cap: int = PROP_CLASS_CAP,
) -> PropResult:
    """Exact integral ``prop_i`` by exhaustive search over class-feasible bundles.

    Each item goes to one class or stays out; class ``j``'s bundle must admit a
    perfect matching into class ``j``.  The reported ``upper_bound`` is
    ``min(|N_i|, mu_i / k)`` with ``mu_i`` the maximum matching size of the
    items class ``i`` likes; it bounds the divisible optimum too, so
    ``divisible_gap`` is clear exactly when the integral search is provably
    optimal over divisible matchings as well.
    """
    _check_class(inst, class_id)
    if inst.num_items > item_cap:
        raise OracleCapError(f"prop oracle needs |M| <= {item_cap}, instance has {inst.num_items} items")
    if inst.num_classes > class_cap:
        raise OracleCapError(f"prop oracle needs k <= {class_cap}, instance has {inst.num_classes} classes")
    k = inst.num_classes
    cn = inst.class_neighbors
    liked = [o for o in range(inst.num_items) if cn[o][class_id]]
    n_i = len(inst.class_agents[class_id])
    mu = max_matching_size([inst.neighbors[o] for o in liked]) if liked else 0
    upper = min(float(n_i), mu / k)

    # items class i does not like never raise any V_i*, so only the liked
    # items are distributed
    own = [dict() for _ in range(k)]  # own-class matching of bundle j: agent -> item
    opt = [dict() for _ in range(k)]  # class-i matching of bundle j
    cur = [0] * k
    best = 0
    cap = min(n_i, mu // k)

    def bound(remaining: int) -> int:
        # highest common level the remaining items could lift every bundle to
        lvl = min(cur)
        while lvl < cap and sum(max(0, lvl + 1 - c) for c in cur) <= remaining:
            lvl += 1
        return lvl

    def dfs(pos: int) -> None:
        nonlocal best
        if best >= cap:
            return
        remaining = len(liked) - pos
        if bound(remaining) <= best:
            return
        if pos == len(liked):
            best = max(best, min(cur))
            return
        o = liked[pos]
        order = sorted(range(k), key=lambda j: cur[j])
        for j in order:
            saved_own = dict(own[j])
            if not _augment(lambda x: cn[x][j], own[j], o, set()):
                own[j] = saved_own
                continue
            saved_opt = dict(opt[j])
            gained = _augment(lambda x: cn[x][class_id], opt[j], o, set())
            if gained:
                cur[j] += 1
            dfs(pos + 1)
            if gained:
                cur[j] -= 1
            opt[j] = saved_opt
            own[j] = saved_own
        dfs(pos + 1)

    dfs(0)
    return PropResult(class_id, best, upper, best < upper - 1e-9)


# -- class Nash welfare -----------------------------------------------------


def cmnw_bruteforce(inst: Instance, item_cap: int = CMNW_ITEM_CAP) -> tuple[Matching, float]:
    """A maximal matching of maximum class Nash welfare.

    Maximal matchings are enumerated depth first, agents in ascending id with
    "unmatched" last, so the first maximizer met is the lexicographically
    smallest per-item assignment tuple (unmatched encoded as ``num_agents``).
    Products of class values are compared exactly.  When every maximal
    matching leaves some class empty (welfare 0), ties are broken first by the
    number of classes with positive value, then by the product of those values.
    """
    if inst.num_items > item_cap:
        raise OracleCapError(f"CMNW oracle needs |M| <= {item_cap}, instance has {inst.num_items} items")
    k = inst.num_classes
    cls = inst.agent_class
    nbs = [sorted(nb) for nb in inst.neighbors]
    m = inst.num_items
    used: set[int] = set()
    counts = [0] * k
    current: dict[int, int] = {}
    skipped: list[int] = []
    best_key = (-1, -1, -1)
    best_assign: dict[int, int] = {}

    def dfs(pos: int) -> None:
        nonlocal best_key, best_assign
        if pos == m:
            for o in skipped:
                if any(a not in used for a in nbs[o]):
                    return
            pos_vals = [c for c in counts if c]
            key = (math.prod(counts), len(pos_vals), math.prod(pos_vals))
            if key > best_key:
                best_key = key
                best_assign = dict(current)
            return
        for a in nbs[pos]:
            if a in used:
                continue
            used.add(a)
            counts[cls[a]] += 1
            current[pos] = a
            dfs(pos + 1)
            del current[pos]
            counts[cls[a]] -= 1
            used.discard(a)
        # skipping is only maximal if every neighbor ends up matched
        if _can_fill(pos):
            skipped.append(pos)
            dfs(pos + 1)
            skipped.pop()

    def _can_fill(pos: int) -> bool:
        # a free neighbor can still be saturated by a later item
        later = set()
        for o in range(pos + 1, m):
            later.update(nbs[o])
        return all(a in used or a in later for a in nbs[pos])

    dfs(0)
    match = Matching.from_assignment(inst, best_assign)
    return match, cnsw_from_values(match.class_counts())


# -- report ---------------------------------------------------------------


@dataclass
class MetricsReport:
    usw: int
    nonwasteful: bool
    class_values: tuple[int, ...]
    cef_pairs: dict[tuple[int, int], CefPair]
    cef_alpha: Fraction
    cef1: bool
    cnsw: float
    cprop: dict[int, dict] | None = field(default=None)

    def to_dict(self) -> dict:
        out = {
            "usw": self.usw,
            "nonwasteful": self.nonwasteful,
            "class_values": list(self.class_values),
            "cef_pairs": [
                {"i": i, "j": j, **p.to_dict()} for (i, j), p in sorted(self.cef_pairs.items())
            ],
            "cef_alpha": float(self.cef_alpha),
            "cef_alpha_exact": str(self.cef_alpha),
            "cef1": self.cef1,
            "cnsw": self.cnsw,
        }
        if self.cprop is not None:
            out["cprop"] = {str(i): rec for i, rec in sorted(self.cprop.items())}
        return out


def metrics_report(inst: Instance, m: Matching, with_prop: bool = False) -> MetricsReport:
    rep = cef_report(inst, m)
    values = m.class_counts()
    cprop = None
    if with_prop:
        cprop = {}
        for i in range(inst.num_classes):
            pr = prop_share_oracle(inst, i)
            ratio = None if pr.value == 0 else values[i] / pr.value
            cprop[i] = {
                "v_i": values[i],
                "prop_i": pr.value,
                "ratio": "SATISFIED" if ratio is None else ratio,
                "divisible_gap": pr.divisible_gap,
            }
    return MetricsReport(
        usw=m.size,
        nonwasteful=is_nonwasteful(inst, m),
        class_values=values,
        cef_pairs=rep.pairs,
        cef_alpha=rep.alpha,
        cef1=cef1_check(inst, m),
        cnsw=cnsw(inst, m),
        cprop=cprop,
    )


__all__ = [
    "Bundle",
    "CefPair",
    "CefReport",
    "MetricsReport",
    "OracleCapError",
    "PropResult",
    "class_value",
    "cef1_check",
    "cef_report",
    "cmnw_bruteforce",
    "cnsw",
    "exhaustive_matching_size",
    "hopcroft_karp",
    "metrics_report",
    "optimistic_value",
    "prop_share_oracle",
    "usw_opt",
]
