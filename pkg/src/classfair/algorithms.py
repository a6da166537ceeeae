"""Online matching algorithms.

``run_random`` is the two-stage uniform procedure: pick a class uniformly among
those with a free adjacent agent, then a free adjacent agent uniformly inside
it.  The rest are deterministic baselines, the divisible split strategy for the
nested two-class construction, and the two closed-form helpers that go with it.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .instance import Instance, InstanceError, gen_divisible_hardness
from .matching import FRACTION_TOL, FractionalMatching, Matching
from .valuation import Bundle, optimistic_value

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# numpy filtering pays off only for long neighbor lists
_VECTOR_MIN_DEGREE = 48


def derive_seed(master: int, index: int) -> int:
    """Per-trial seed: output ``index`` of a SplitMix64 stream started at ``master``."""
    z = (master + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Step(NamedTuple):
    item: int
    candidates: tuple[int, ...]
    chosen_class: int | None
    chosen_agent: int | None


@dataclass
class RunTrace:
    matching: Matching
    steps: list[Step] | None
    dummies: tuple[tuple[int, ...], ...] | None
    tau: int | None
    n1: list[int] | None

    def audit_bundle(self, class_id: int) -> Bundle:
        """``A_i``: the class's own items plus the dummy copies."""
        if self.dummies is None:
            raise ValueError("run was not audited")
        return Bundle(self.matching.bundle(class_id), self.dummies[class_id])


def _eligible(inst: Instance, o: int, i: int, sat) -> Sequence[int]:
    arr = inst.class_neighbor_arrays[o][i]
    if len(arr) >= _VECTOR_MIN_DEGREE:
        return arr[~sat[arr]]
    return [a for a in inst.class_neighbors[o][i] if not sat[a]]


def run_random(
    inst: Instance,
    seed: int,
    audit: bool = False,
    record_steps: bool = True,
) -> RunTrace:
    """One run of the uniform two-stage algorithm.

    Random draws come from ``random.Random(seed)`` in arrival order, one class
    draw then one agent draw per matched item.  With ``audit`` the run also
    collects, per class, a dummy copy of every item whose adjacent agents in
    that class were all saturated on arrival.  For two-class instances the trace
    carries ``n1[t]``, the number of free class-0 agents adjacent to some item
    in ``t..m-1``, and ``tau``, the first ``t`` with ``n1[t] == 0``.
    """
    rng = random.Random(seed)
    k = inst.num_classes
    m = inst.num_items
    sat = np.zeros(inst.num_agents, dtype=bool)
    cls = inst.agent_class
    arrays = inst.class_neighbor_arrays
    assignment: dict[int, int] = {}
    steps: list[Step] | None = [] if record_steps else None
    dummies: list[list[int]] | None = [[] for _ in range(k)] if audit else None

    track = k == 2
    if track:
        last = inst.last_item_of_agent
        zero = np.asarray(inst.class_agents[0], dtype=np.int64)
        live0 = zero[last[zero] >= 0]
        active = len(live0)
        expire: dict[int, list[int]] = {}
        for a, t in zip(live0.tolist(), last[live0].tolist()):
            expire.setdefault(t, []).append(a)
        n1 = [0] * (m + 1)

    for o in range(m):
        if track:
            n1[o] = active
        cands = []
        elig = []
        for i in range(k):
            if not len(arrays[o][i]):
                continue
            e = _eligible(inst, o, i, sat)
            if len(e):
                cands.append(i)
                elig.append(e)
            elif audit:
                dummies[i].append(o)
        if cands:
            pick = rng.randrange(len(cands))
            c = cands[pick]
            e = elig[pick]
            a = int(e[rng.randrange(len(e))])
            sat[a] = True
            assignment[o] = a
            if track and cls[a] == 0:
                active -= 1
        else:
            c = a = None
        if steps is not None:
            steps.append(Step(o, tuple(cands), c, a))
        if track:
            for b in expire.get(o, ()):
                if not sat[b]:
                    active -= 1

    tau = None
    if track:
        n1[m] = active
        tau = next(t for t, v in enumerate(n1) if v == 0)
    return RunTrace(
        matching=Matching(inst, assignment),
        steps=steps,
        dummies=tuple(tuple(d) for d in dummies) if audit else None,
        tau=tau,
        n1=n1 if track else None,
    )


def run_greedy_lexico(inst: Instance) -> Matching:
    """Each item to the lowest class, then lowest agent id, that is free and adjacent."""
    used: set[int] = set()
    assignment = {}
    cn = inst.class_neighbors
    for o in range(inst.num_items):
        for per_class in cn[o]:
            free = [a for a in per_class if a not in used]
            if free:
                a = min(free)
                used.add(a)
                assignment[o] = a
                break
    return Matching(inst, assignment)


def run_envy_capped_greedy(inst: Instance, alpha: float | Fraction) -> Matching:
    """Greedy that avoids creating ``alpha``-envy when it has a choice.

    A class ``j`` is acceptable for item ``o`` when every other class ``i``
    keeps ``V_i >= alpha * V_i*(Y_j + o)``.  The item goes to the acceptable
    class with the smallest current value (lowest id on ties), or, if no
    eligible class is acceptable, to the eligible class with the smallest
    value.  Inside the class the lowest free adjacent agent is used.
    """
    alpha = Fraction(alpha) if not isinstance(alpha, Fraction) else alpha
    k = inst.num_classes
    cn = inst.class_neighbors
    used: set[int] = set()
    assignment = {}
    values = [0] * k
    bundles: list[list[int]] = [[] for _ in range(k)]
    vstar = [[0] * k for _ in range(k)]  # vstar[i][j] = V_i*(Y_j)

    def violates(i: int, j: int, o: int) -> bool:
        if values[i] >= alpha * (vstar[i][j] + 1):
            return False
        if values[i] < alpha * vstar[i][j]:
            return True
        if not cn[o][i]:
            return False
        return values[i] < alpha * optimistic_value(inst, i, bundles[j] + [o])

    for o in range(inst.num_items):
        eligible = [j for j in range(k) if any(a not in used for a in cn[o][j])]
        if not eligible:
            continue
        ok = [j for j in eligible if not any(violates(i, j, o) for i in range(k) if i != j)]
        pool = ok or eligible
        j = min(pool, key=lambda c: (values[c], c))
        a = min(a for a in cn[o][j] if a not in used)
        used.add(a)
        assignment[o] = a
        values[j] += 1
        bundles[j].append(o)
        for i in range(k):
            if i != j and cn[o][i]:
                vstar[i][j] = optimistic_value(inst, i, bundles[j])
    return Matching(inst, assignment)


# -- divisible split ---------------------------------------------------------


@dataclass(frozen=True)
class SplitParams:
    """Class-0 share ``(1+alpha)/2`` of each item; ``beta = (1-alpha)/(1+alpha)``."""

    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")

    @property
    def beta(self) -> float:
        return (1 - self.alpha) / (1 + self.alpha)

    @classmethod
    def from_beta(cls, beta: float) -> "SplitParams":
        return cls((1 - beta) / (1 + beta))

    @property
    def first_share(self) -> float:
        return (1 + self.alpha) / 2


def _divisible_size(inst: Instance) -> int:
    n = inst.num_agents // 2
    if n < 1 or inst.num_agents != 2 * n or inst.num_items != 2 * n or inst.num_classes != 2:
        raise InstanceError("instance is not a divisible hardness construction")
    ref = gen_divisible_hardness(n)
    if inst.agent_class != ref.agent_class or any(a != b for a, b in zip(inst.neighbors, ref.neighbors)):
        raise InstanceError("instance is not a divisible hardness construction")
    return n


def _waterfill(runs: list[tuple[int, int, float]], mass: float) -> tuple[list[tuple[int, int, float]], float]:
    """Spread ``mass`` equally over agents, capping each at its residual.

    ``runs`` holds ``(lo, hi, residual)`` blocks.  Returns per-block shares and
    the mass actually placed.
    """
    count = sum(hi - lo for lo, hi, _ in runs)
    out = []
    left = mass
    ordered = sorted(runs, key=lambda r: r[2])
    for pos, (lo, hi, res) in enumerate(ordered):
        each = left / count
        if each < res:
            for lo2, hi2, _ in ordered[pos:]:
                out.append((lo2, hi2, each))
            return out, mass
        out.append((lo, hi, res))
        left -= res * (hi - lo)
        count -= hi - lo
    return out, mass - left


def run_divisible_split(inst: Instance, params: SplitParams) -> FractionalMatching:
    """Split strategy on the nested two-class construction.

    Every item offers ``(1+alpha)/2`` to class 0, spread equally over its
    adjacent class-0 agents with spare capacity (capped at that capacity); the
    rest goes to class 1, spread equally the same way.
    """
    n = _divisible_size(inst)
    fm = FractionalMatching(inst)
    share0 = params.first_share
    for o in range(inst.num_items):
        hi0 = n - o // 2
        runs0 = [(lo, hi, 1.0 - v) for lo, hi, v in fm.load_runs(0, hi0) if 1.0 - v > FRACTION_TOL]
        given = 0.0
        if runs0:
            blocks, given = _waterfill(runs0, share0)
            for lo, hi, each in blocks:
                fm.add_range(o, lo, hi, each)
        rest = 1.0 - given
        runs1 = [(lo, hi, 1.0 - v) for lo, hi, v in fm.load_runs(n, 2 * n) if 1.0 - v > FRACTION_TOL]
        if runs1 and rest > 0:
            blocks, _ = _waterfill(runs1, rest)
            for lo, hi, each in blocks:
                fm.add_range(o, lo, hi, each)
    return fm


def divisible_fixed_point_residual(beta: float) -> float:
    return (1 - math.exp(-(1 + beta) / 2)) * 2 / (1 + beta) - beta


def solve_divisible_fixed_point(tol: float = 1e-9) -> float:
    """Root of ``beta = (1 - exp(-(1+beta)/2)) * 2/(1+beta)`` on ``[0, 1]`` by bisection."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = 0.0, 1.0
    f_lo = divisible_fixed_point_residual(lo)
    while True:
        mid = (lo + hi) / 2
        f_mid = divisible_fixed_point_residual(mid)
        if hi - lo <= tol and abs(f_mid) <= tol:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid


def harmonic_stop_index(n: int, alpha: float) -> int:
    """Smallest ``i`` with ``(1+alpha)/2 * (H_n - H_{n-i}) >= 1/2``."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    half = (1 + alpha) / 2
    acc = 0.0
    for i in range(1, n + 1):
        acc += 1.0 / (n - i + 1)
        if half * acc >= 0.5:
            return i
    return n
