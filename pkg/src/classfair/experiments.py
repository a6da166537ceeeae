"""Seeded Monte Carlo harness and the named experiment presets.

Fairness "in expectation" is judged as a ratio of sample means with a band of
two standard errors.  Every preset returns a :class:`PresetReport` whose rows
carry a target, a tolerance and a pass flag.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .algorithms import (
    SplitParams,
    derive_seed,
    harmonic_stop_index,
    run_divisible_split,
    run_envy_capped_greedy,
    run_greedy_lexico,
    run_random,
    solve_divisible_fixed_point,
)
from .instance import (
    Instance,
    gen_cef_impossibility,
    gen_cnsw_counterexample,
    gen_divisible_hardness,
    gen_price_of_fairness,
    gen_random_bipartite,
    make_instance,
)
from .matching import Matching, class_loads, is_nonwasteful
from .valuation import (
    cef1_check,
    cef_report,
    cmnw_bruteforce,
    cnsw,
    exhaustive_matching_size,
    optimistic_value,
    prop_share_oracle,
    usw_opt,
)

DEFAULT_SEED = 20240517
E2 = math.exp(2)
TAU_TARGET = 1 - 1 / E2
V1_TARGET = (1 - 1 / E2) / 2
ENVY_TARGET = (E2 - 1) / (E2 + 1)
ODE_FRACTIONS = (0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2)


# -- algorithm selection ----------------------------------------------------


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    alpha: Fraction = Fraction(0)

    NAMES = ("random", "greedy_lexico", "envy_capped")

    @classmethod
    def parse(cls, text: str) -> "AlgorithmSpec":
        """``random``, ``greedy_lexico`` or ``envy_capped[:alpha]``."""
        name, _, arg = text.partition(":")
        if name not in cls.NAMES:
            raise ValueError(f"unknown algorithm {name!r}; choose from {', '.join(cls.NAMES)}")
        alpha = Fraction(arg) if arg else Fraction(0)
        return cls(name, alpha)

    def __str__(self):
        return f"envy_capped:{self.alpha}" if self.name == "envy_capped" else self.name

    @property
    def randomized(self) -> bool:
        return self.name == "random"

    def run(self, inst: Instance, seed: int = 0, audit: bool = False):
        """Returns ``(matching, trace_or_None)``."""
        if self.name == "random":
            tr = run_random(inst, seed, audit=audit, record_steps=False)
            return tr.matching, tr
        if self.name == "greedy_lexico":
            return run_greedy_lexico(inst), None
        return run_envy_capped_greedy(inst, self.alpha), None


# -- statistics ---------------------------------------------------------------


@dataclass(frozen=True)
class Stat:
    mean: float
    stderr: float


def mean_stderr(x: np.ndarray) -> Stat:
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        return Stat(float(x.mean()), 0.0)
    return Stat(float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x))))


def ratio_of_means(a: np.ndarray, b: np.ndarray) -> Stat:
    """``mean(a)/mean(b)`` with a delta-method standard error."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mb = b.mean()
    r = a.mean() / mb
    if len(a) < 2:
        return Stat(float(r), 0.0)
    resid = a - r * b
    return Stat(float(r), float(resid.std(ddof=1) / math.sqrt(len(a)) / mb))


# -- trials ---------------------------------------------------------------------


def _one_trial(inst: Instance, algo: AlgorithmSpec, seed: int, audit: bool, track_n1: bool) -> dict:
    m, tr = algo.run(inst, seed, audit=audit)
    k = inst.num_classes
    bundles = m.bundles()
    values = [len(b) for b in bundles]
    vstar = [
        [values[i] if i == j else optimistic_value(inst, i, bundles[j]) for j in range(k)]
        for i in range(k)
    ]
    out = {
        "values": values,
        "vstar": vstar,
        "usw": m.size,
        "nonwasteful": is_nonwasteful(inst, m),
    }
    if audit and tr is not None:
        out["astar"] = [optimistic_value(inst, i, tr.audit_bundle(i)) for i in range(k)]
    if tr is not None and tr.tau is not None:
        out["tau"] = tr.tau
        if track_n1:
            out["n1"] = tr.n1
    return out


def _run_chunk(inst, algo, master, indices, audit, track_n1) -> list[dict]:
    return [_one_trial(inst, algo, derive_seed(master, t), audit, track_n1) for t in indices]


@dataclass
class TrialSummary:
    preset: str
    instance: str
    params: dict
    trials: int
    master_seed: int
    algorithm: str
    metrics: dict[str, Stat]
    cef_alpha_of_expectations: float
    cef_alpha_stderr: float
    usw_opt: int
    usw_ratio: float
    tau_fraction: float | None = None
    audit_pass_rate: float | None = None
    cprop_ratios: dict[int, float] | None = None
    n1_mean: np.ndarray | None = field(default=None, repr=False)
    samples: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def pair_ratio(self, i: int, j: int) -> Stat:
        return ratio_of_means(self.samples["values"][:, i], self.samples["vstar"][:, i, j])

    def to_dict(self) -> dict:
        d = {
            "preset": self.preset,
            "instance": self.instance,
            "params": self.params,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "algorithm": self.algorithm,
            "metrics": {k: {"mean": v.mean, "stderr": v.stderr} for k, v in self.metrics.items()},
            "cef_alpha_of_expectations": self.cef_alpha_of_expectations,
            "cef_alpha_stderr": self.cef_alpha_stderr,
            "usw_opt": self.usw_opt,
            "usw_ratio": self.usw_ratio,
            "tau_fraction": self.tau_fraction,
            "audit_pass_rate": self.audit_pass_rate,
        }
        if self.cprop_ratios is not None:
            d["cprop_ratios"] = {str(i): r for i, r in self.cprop_ratios.items()}
        return d


def run_trials(
    inst: Instance,
    algorithm: AlgorithmSpec | str,
    trials: int,
    master_seed: int = DEFAULT_SEED,
    *,
    audit: bool = False,
    track_n1: bool = False,
    workers: int = 1,
    preset: str = "",
    params: dict | None = None,
) -> TrialSummary:
    """Run ``trials`` seeded trials and aggregate them.

    Trial ``t`` uses ``derive_seed(master_seed, t)``.  Results are indexed by
    trial number, so the summary does not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    algo = AlgorithmSpec.parse(algorithm) if isinstance(algorithm, str) else algorithm
    workers = _resolve_workers(workers)
    if workers > 1 and trials > 1:
        chunks = [list(range(trials))[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [
                pool.submit(_run_chunk, inst, algo, master_seed, idx, audit, track_n1) for idx in chunks
            ]
            results: list[dict | None] = [None] * trials
            for idx, fut in zip(chunks, futs):
                for t, rec in zip(idx, fut.result()):
                    results[t] = rec
    else:
        results = _run_chunk(inst, algo, master_seed, range(trials), audit, track_n1)

    k = inst.num_classes
    values = np.array([r["values"] for r in results], dtype=np.int64)
    vstar = np.array([r["vstar"] for r in results], dtype=np.int64)
    usw = np.array([r["usw"] for r in results], dtype=np.int64)
    nw = np.array([r["nonwasteful"] for r in results], dtype=bool)
    samples = {"values": values, "vstar": vstar, "usw": usw, "nonwasteful": nw}
    metrics = {"usw": mean_stderr(usw), "nonwasteful": mean_stderr(nw)}
    for i in range(k):
        metrics[f"V[{i}]"] = mean_stderr(values[:, i])
        for j in range(k):
            if i != j:
                metrics[f"Vstar[{i},{j}]"] = mean_stderr(vstar[:, i, j])

    alpha, alpha_se = 1.0, 0.0
    for i in range(k):
        for j in range(k):
            if i != j and vstar[:, i, j].mean() > 0:
                st = ratio_of_means(values[:, i], vstar[:, i, j])
                if st.mean < alpha:
                    alpha, alpha_se = st.mean, st.stderr

    summary = TrialSummary(
        preset=preset,
        instance=inst.name,
        params=dict(params or {}),
        trials=trials,
        master_seed=master_seed,
        algorithm=str(algo),
        metrics=metrics,
        cef_alpha_of_expectations=alpha,
        cef_alpha_stderr=alpha_se,
        usw_opt=usw_opt(inst),
        usw_ratio=0.0,
        samples=samples,
    )
    summary.usw_ratio = float(usw.mean() / summary.usw_opt) if summary.usw_opt else 1.0

    if audit and "astar" in results[0]:
        astar = np.array([r["astar"] for r in results], dtype=np.int64)
        samples["astar"] = astar
        ok = np.all(astar <= 2 * values, axis=1)
        samples["audit_pass"] = ok
        summary.audit_pass_rate = float(ok.mean())
        for i in range(k):
            metrics[f"Astar[{i}]"] = mean_stderr(astar[:, i])
    if "tau" in results[0]:
        tau = np.array([r["tau"] for r in results], dtype=np.int64)
        samples["tau"] = tau
        metrics["tau"] = mean_stderr(tau)
        summary.tau_fraction = float(tau.mean() / inst.num_items)
        if track_n1:
            total = np.zeros(inst.num_items + 1, dtype=np.int64)
            for r in results:
                total += np.asarray(r["n1"], dtype=np.int64)
            summary.n1_mean = total / trials
    return summary


def _resolve_workers(workers: int) -> int:
    if workers == 0:
        import os

        return os.cpu_count() or 1
    return max(1, workers)


# -- reports ----------------------------------------------------------------


@dataclass
class Row:
    """One checked quantity.

    ``kind`` selects the test: ``approx`` is ``|mean - target| <= tolerance``,
    ``ge`` is ``mean >= target - tolerance``, ``le`` is ``mean <= target + tolerance``,
    ``eq`` is exact equality.
    """

    preset: str
    params: dict
    metric: str
    mean: Any
    stderr: float
    target: Any
    tolerance: float
    kind: str = "approx"

    @property
    def passed(self) -> bool:
        if self.kind == "eq":
            return self.mean == self.target
        if self.kind == "ge":
            return self.mean >= self.target - self.tolerance
        if self.kind == "le":
            return self.mean <= self.target + self.tolerance
        return abs(self.mean - self.target) <= self.tolerance

    def record(self) -> dict:
        return {
            "preset": self.preset,
            "param_json": _param_json(self.params),
            "metric": self.metric,
            "mean": _num(self.mean),
            "stderr": _num(self.stderr),
            "target": _num(self.target),
            "tolerance": _num(self.tolerance),
            "pass": self.passed,
        }


def _num(x):
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def _param_json(params: dict) -> str:
    import json

    return json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)


@dataclass
class PresetReport:
    preset: str
    params: dict
    seed: int | None
    rows: list[Row] = field(default_factory=list)
    summaries: list[TrialSummary] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def add(self, metric: str, mean, target, tolerance: float = 0.0, kind: str = "approx",
            stderr: float = 0.0, params: dict | None = None) -> Row:
        row = Row(self.preset, params if params is not None else self.params, metric,
                  mean, stderr, target, tolerance, kind)
        self.rows.append(row)
        return row

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> list[Row]:
        return [r for r in self.rows if not r.passed]


# -- panels -----------------------------------------------------------------------


def random_panel(
    count: int,
    seed: int,
    *,
    min_k: int = 1,
    max_k: int = 4,
    max_agents: int = 20,
    min_items: int = 1,
    max_items: int = 20,
    edge_prob: tuple[float, float] = (0.1, 0.6),
) -> list[Instance]:
    """Seeded random instances with ``k <= max_k``, at most ``max_agents`` agents and
    ``max_items`` items."""
    rng = random.Random(seed)
    out = []
    for idx in range(count):
        k = rng.randint(min_k, max_k)
        per = max(1, max_agents // k)
        sizes = [rng.randint(1, per) for _ in range(k)]
        m = rng.randint(min_items, max_items)
        p = rng.uniform(*edge_prob)
        out.append(gen_random_bipartite(k, sizes, m, round(p, 6), derive_seed(seed, idx)))
    return out


def cprop_panel(seed: int = DEFAULT_SEED, size: int = 10) -> list[Instance]:
    """Oracle-sized instances whose integral proportional shares are provably
    also the divisible ones (the oracle's gap flag is clear for every class)."""
    fixed = [
        make_instance(2, [0, 0, 1, 1], [[0, 1, 2, 3]] * 4, name="k2_complete_4items"),
        make_instance(1, [0, 0, 0], [[0, 1], [1, 2], [2], [0]], name="k1_small"),
        make_instance(2, [0, 1], [[], []], name="no_edges"),
    ]
    out = [inst for inst in fixed if _gap_clear(inst)]
    rng = random.Random(seed)
    attempt = 0
    while len(out) < size:
        k = rng.randint(2, 3)
        sizes = [rng.randint(1, 3) for _ in range(k)]
        m = rng.randint(3, 8)
        inst = gen_random_bipartite(k, sizes, m, round(rng.uniform(0.3, 0.8), 6), derive_seed(seed, attempt))
        attempt += 1
        if _gap_clear(inst) and any(prop_share_oracle(inst, i).value > 0 for i in range(k)):
            out.append(inst)
    return out


def _gap_clear(inst: Instance) -> bool:
    return all(not prop_share_oracle(inst, i).divisible_gap for i in range(inst.num_classes))


# -- presets ----------------------------------------------------------------------


def preset_nw_usw(count: int = 1000, seed: int = DEFAULT_SEED) -> PresetReport:
    """Non-wastefulness and the half-USW bound for every algorithm on a random panel."""
    rep = PresetReport("nw_usw", {"count": count}, seed)
    panel = random_panel(count, seed)
    algos = [AlgorithmSpec("random"), AlgorithmSpec("greedy_lexico"), AlgorithmSpec("envy_capped", Fraction(1, 2))]
    for algo in algos:
        nw_ok = usw_ok = 0
        for idx, inst in enumerate(panel):
            m, _ = algo.run(inst, derive_seed(seed, idx))
            nw_ok += is_nonwasteful(inst, m)
            usw_ok += 2 * m.size >= usw_opt(inst)
        rep.add(f"nonwasteful_rate[{algo}]", nw_ok / count, 1.0, kind="eq")
        rep.add(f"half_usw_rate[{algo}]", usw_ok / count, 1.0, kind="eq")
    return rep


def preset_cef_lower(
    n: int = 200,
    trials: int = 5000,
    seed: int = DEFAULT_SEED,
    panel_size: int = 20,
    workers: int = 1,
) -> PresetReport:
    """Half-CEF in expectation for the random algorithm, with the dummy-item audit."""
    params = {"n": n, "trials": trials, "panel_size": panel_size}
    rep = PresetReport("cef_lower", params, seed)
    instances = [gen_cef_impossibility(n)] + random_panel(panel_size, seed, min_k=2)
    for idx, inst in enumerate(instances):
        s = run_trials(inst, "random", trials, derive_seed(seed, idx), audit=True,
                       workers=workers, preset="cef_lower", params={"instance": inst.name})
        rep.summaries.append(s)
        p = {"instance": inst.name}
        k = inst.num_classes
        rep.add("audit_pass_rate", s.audit_pass_rate, 1.0, kind="eq", params=p)
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                d = mean_stderr(s.samples["astar"][:, i] - s.samples["vstar"][:, i, j])
                rep.add(f"astar_minus_vstar[{i},{j}]", d.mean, 0.0, 2 * d.stderr, kind="ge",
                        stderr=d.stderr, params=p)
        rep.add("cef_alpha_of_expectations", s.cef_alpha_of_expectations, 0.5, 2 * s.cef_alpha_stderr,
                kind="ge", stderr=s.cef_alpha_stderr, params=p)
    return rep


def preset_cef_upper(n: int = 2000, trials: int = 500, seed: int = DEFAULT_SEED,
                     workers: int = 1) -> PresetReport:
    """Stopping time and envy of the random algorithm on the two-class triangular instance."""
    params = {"n": n, "trials": trials}
    rep = PresetReport("cef_upper", params, seed)
    inst = gen_cef_impossibility(n)
    s = run_trials(inst, "random", trials, seed, track_n1=True, workers=workers,
                   preset="cef_upper", params=params)
    rep.summaries.append(s)
    v1 = s.samples["values"][:, 0]
    envy = s.pair_ratio(0, 1)
    tau = s.metrics["tau"]
    rep.add("tau_fraction", s.tau_fraction, TAU_TARGET, 0.01, stderr=tau.stderr / n)
    rep.add("v1_fraction", float(v1.mean() / n), V1_TARGET, 0.01, stderr=mean_stderr(v1).stderr / n)
    rep.add("envy_ratio", envy.mean, ENVY_TARGET, 0.015, stderr=envy.stderr)
    _ode_rows(rep, s, n)
    return rep


def ode_solution(x: np.ndarray | float, n: int):
    """Closed-form solution of ``dn1/dx = (1 + (2 n1 - 1)/x)/2`` with ``n1(n) = n``."""
    x = np.asarray(x, dtype=float)
    return x + 0.5 * x * np.log(x / n) + 0.5 - x / (2 * n)


def ode_table(summary: TrialSummary, n: int, fractions: Sequence[float] = ODE_FRACTIONS) -> list[dict]:
    out = []
    for f in fractions:
        x = n * f
        t = int(round(n - x))
        sim = float(summary.n1_mean[t])
        pred = float(ode_solution(n - t, n))
        out.append({"x_over_n": f, "step": t, "simulated": sim, "ode": pred, "deviation_over_n": abs(sim - pred) / n})
    return out


def _ode_rows(rep: PresetReport, s: TrialSummary, n: int) -> float:
    table = ode_table(s, n)
    rep.extra["ode_table"] = table
    for rec in table:
        rep.add(f"ode_deviation_over_n[x/n={rec['x_over_n']}]", rec["deviation_over_n"], 0.0, 0.02, kind="le")
    worst = max(rec["deviation_over_n"] for rec in table)
    rep.add("ode_max_deviation_over_n", worst, 0.0, 0.02, kind="le")
    return worst


def preset_ode_check(n: int = 2000, trials: int = 500, seed: int = DEFAULT_SEED,
                     workers: int = 1, summary: TrialSummary | None = None) -> PresetReport:
    """Averaged free-agent trajectory against the fluid-limit ODE."""
    params = {"n": n, "trials": trials}
    rep = PresetReport("ode", params, seed)
    if summary is None:
        summary = run_trials(gen_cef_impossibility(n), "random", trials, seed, track_n1=True,
                             workers=workers, preset="ode", params=params)
    rep.summaries.append(summary)
    rep.add("n1_at_start", float(summary.n1_mean[0]), float(ode_solution(n, n)), 1e-9)
    _ode_rows(rep, summary, n)
    traj = summary.n1_mean
    rep.add("mean_trajectory_nonincreasing", bool(np.all(np.diff(traj) <= 0)), True, kind="eq")
    return rep


def preset_cprop(
    panel: Sequence[Instance] | None = None,
    trials: int = 10000,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> PresetReport:
    """Half-CPROP in expectation against the exact proportional-share oracle."""
    panel = list(panel) if panel is not None else cprop_panel(seed)
    rep = PresetReport("cprop", {"panel_size": len(panel), "trials": trials}, seed)
    for idx, inst in enumerate(panel):
        s = run_trials(inst, "random", trials, derive_seed(seed, idx), workers=workers,
                       preset="cprop", params={"instance": inst.name})
        p = {"instance": inst.name}
        s.cprop_ratios = {}
        for i in range(inst.num_classes):
            pr = prop_share_oracle(inst, i)
            st = s.metrics[f"V[{i}]"]
            s.cprop_ratios[i] = st.mean / pr.value if pr.value else 1.0
            rep.add(f"mean_V[{i}]_vs_half_prop", st.mean, 0.5 * pr.value, 2 * st.stderr,
                    kind="ge", stderr=st.stderr, params=p)
            rep.add(f"divisible_gap[{i}]", pr.divisible_gap, False, kind="eq", params=p)
        if inst.num_classes == 1:
            st = s.metrics["usw"]
            rep.add("mean_usw_vs_half_opt", st.mean, 0.5 * s.usw_opt, 2 * st.stderr,
                    kind="ge", stderr=st.stderr, params=p)
        rep.summaries.append(s)
    return rep


def pof_analytic_ratio(k: int, p: int, q: int) -> Fraction:
    """Best USW ratio an ``alpha = p/q``-CEF algorithm can reach on the two-phase instance."""
    return Fraction(q * k, q * k + p * (k - 1))


def preset_price_of_fairness(k: int = 50, p: int = 1, q: int = 2,
                             sweep: Sequence[int] = (10, 50, 200, 1000)) -> PresetReport:
    params = {"k": k, "p": p, "q": q}
    rep = PresetReport("pof", params, None)
    ratio = pof_analytic_ratio(k, p, q)
    rep.extra["analytic_ratio"] = str(ratio)
    if p >= 1:
        inst = gen_price_of_fairness(k, p, q)
        m = run_envy_capped_greedy(inst, Fraction(p, q))
        opt = usw_opt(inst)
        rep.extra.update(greedy_usw=m.size, usw_opt=opt)
        # the instance's own optimum, found by matching, pins the formula
        rep.add("analytic_ratio", ratio, Fraction(q * k, opt), kind="eq")
        rep.add("greedy_usw", m.size, q * k, kind="le")
        rep.add("usw_opt", opt, p * (k - 1) + q + q * (k - 1), kind="eq")
        rep.add("greedy_nonwasteful", is_nonwasteful(inst, m), True, kind="eq")
    ratios = [pof_analytic_ratio(kk, p, q) for kk in sweep]
    limit = Fraction(1) / (1 + Fraction(p, q))
    rep.extra["sweep"] = {str(kk): float(r) for kk, r in zip(sweep, ratios)}
    decreasing = all(a > b for a, b in zip(ratios, ratios[1:])) if p else all(r == 1 for r in ratios)
    rep.add("sweep_monotone_decreasing", decreasing, True, kind="eq", params={**params, "sweep": list(sweep)})
    rep.add("sweep_above_limit", all(r >= limit for r in ratios), True, kind="eq",
            params={**params, "sweep": list(sweep)})
    rep.add("sweep_last_minus_limit", ratios[-1] - limit, 0.0, 0.01, kind="le",
            params={**params, "sweep": list(sweep)})
    return rep


def preset_divisible(n: int = 100_000, tol: float = 1e-6) -> PresetReport:
    """Fixed point of the divisible bound against the simulated split strategy."""
    params = {"n": n, "tol": tol}
    rep = PresetReport("divisible", params, None)
    beta = solve_divisible_fixed_point(tol)
    split = SplitParams.from_beta(beta)
    inst = gen_divisible_hardness(n)
    fm = run_divisible_split(inst, split)
    loads = class_loads(inst, fm)
    simulated = loads[0] / loads[1]
    rep.extra.update(beta_analytic=beta, alpha=split.alpha, class_loads=list(loads))
    rep.add("beta_analytic", beta, 0.677, 0.001)
    rep.add("beta_simulated", simulated, beta, 0.01)
    rep.add("class1_load", loads[1], float(n), kind="eq")
    i = harmonic_stop_index(n, split.alpha)
    rep.add("stop_index_fraction", i / n, 1 - math.exp(-1 / (1 + split.alpha)), 1e-3)
    return rep


def preset_cnsw(seed: int = DEFAULT_SEED, count: int = 500) -> PresetReport:
    """Class Nash welfare maximizers versus CEF1 and CEF."""
    rep = PresetReport("cnsw", {"count": count}, seed)
    inst = gen_cnsw_counterexample()
    m, value = cmnw_bruteforce(inst)
    rep.add("cmnw_value", value, 3.0, 1e-12)
    rep.add("cmnw_nonwasteful_and_cef1", is_nonwasteful(inst, m) and cef1_check(inst, m), True, kind="eq")
    x = Matching.from_assignment(inst, {0: 4, 1: 5, 2: 6, 3: 7, 4: 2, 5: 3})
    rep.add("example_x_nonwasteful", is_nonwasteful(inst, x), True, kind="eq")
    rep.add("example_x_cef_alpha", cef_report(inst, x).alpha, Fraction(1), kind="eq")
    rep.add("example_x_cnsw", cnsw(inst, x), math.sqrt(8), 1e-12)
    rep.add("example_x_cnsw_below_max", cnsw(inst, x) < value, True, kind="eq")
    ok = 0
    for inst in cnsw_panel(count, seed):
        m, _ = cmnw_bruteforce(inst)
        ok += is_nonwasteful(inst, m) and cef1_check(inst, m)
    rep.add("random_cmnw_nw_and_cef1_rate", ok / count, 1.0, kind="eq")
    return rep


def cnsw_panel(count: int, seed: int) -> list[Instance]:
    return random_panel(count, seed, min_k=2, max_k=3, max_agents=7, min_items=2, max_items=7,
                        edge_prob=(0.2, 0.7))


def preset_oracle_equivalence(count: int = 500, seed: int = DEFAULT_SEED) -> PresetReport:
    """Hopcroft-Karp optimistic values against exhaustive enumeration on small bundles."""
    rep = PresetReport("oracle_equiv", {"count": count}, seed)
    agree = checks = 0
    rng = random.Random(seed)
    for inst in random_panel(count, seed, max_items=7, max_agents=12, edge_prob=(0.1, 0.8)):
        items = list(range(inst.num_items))
        subsets = [items] + [[o for o in items if rng.random() < 0.5] for _ in range(3)]
        for i in range(inst.num_classes):
            for sub in subsets:
                checks += 1
                agree += optimistic_value(inst, i, sub) == exhaustive_matching_size(inst, i, sub)
    rep.extra["checks"] = checks
    rep.add("agreement_rate", agree / checks, 1.0, kind="eq")
    return rep


PRESETS: dict[str, Callable[..., PresetReport]] = {
    "nw_usw": preset_nw_usw,
    "cef_lower": preset_cef_lower,
    "cef_upper": preset_cef_upper,
    "ode": preset_ode_check,
    "cprop": preset_cprop,
    "pof": preset_price_of_fairness,
    "divisible": preset_divisible,
    "cnsw": preset_cnsw,
    "oracle_equiv": preset_oracle_equivalence,
}
