"""Monte Carlo trial batches, parameter sweeps and their summaries.

Trial ``i`` of a spec draws everything (graph, thresholds, initial opinions)
from ``trial_seed(spec.seed, i)``, so a record can be regenerated from the
spec and its index alone and results do not depend on worker scheduling.
Sweeps reuse the master seed at every grid point; sweeping ``c`` or the
``p`` scale therefore compares nested graphs (common random numbers).
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from statistics import NormalDist
from typing import Any, Iterable, Sequence

import numpy as np

from . import dynamics as dyn
from . import randgen
from .graph import Graph, is_connected, min_degree
from .robustness import EXACT_CAP, HALFSIZE_CAP, CapExceeded, certify_robust_halfsize, is_robust_exact
from .rng import Stream, generator, trial_seed

MODES = (
    "robust-exact",
    "robust-halfsize",
    "consensus-random-init",
    "consensus-witness-init",
    "min-degree",
    "connectivity",
)
MODELS = ("er", "rin", "hetero", "figure1")
SWEEP_VARIABLES = ("c", "n", "p-scale")


class SpecError(ValueError):
    """Invalid experiment specification."""


@dataclass(frozen=True)
class GeneratorSpec:
    """Random graph model and its parameters.

    ``p`` overrides the formula probability for ``er``/``rin``; ``p_scale``
    multiplies whichever probability is in effect (result clamped to 1).
    ``intra`` selects the community graphs of ``rin``: ``"empty"``,
    ``"complete"`` or a list of ``k`` edge lists.
    """

    model: str
    n: int
    r: int = 1
    c: float | str = 0.0
    p: float | None = None
    p_scale: float = 1.0
    k: int = 2
    intra: Any = "empty"
    p_matrix: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        # JSON hands over nested lists; store tuples so specs stay hashable and comparable
        if self.p_matrix is not None:
            object.__setattr__(self, "p_matrix", tuple(tuple(float(v) for v in row) for row in self.p_matrix))
        if isinstance(self.intra, (list, tuple)):
            object.__setattr__(self, "intra", tuple(tuple(tuple(e) for e in edges) for edges in self.intra))
        if self.model not in MODELS:
            raise SpecError(f"unknown model {self.model!r}; expected one of {', '.join(MODELS)}")
        if self.model == "hetero" and self.p_matrix is None:
            raise SpecError("hetero model needs p_matrix")
        if self.p_scale < 0:
            raise SpecError("p_scale must be nonnegative")

    @property
    def total_nodes(self) -> int:
        if self.model == "rin":
            return self.k * self.n
        if self.model == "hetero":
            return len(self.p_matrix)
        return self.n

    def edge_probability(self) -> float:
        if self.model == "er":
            p = self.p if self.p is not None else randgen.er_edge_probability(self.n, self.r, randgen.resolve_c(self.c, self.n)).p
        elif self.model == "rin":
            p = self.p if self.p is not None else randgen.rin_edge_probability(self.k, self.n, self.r, randgen.resolve_c(self.c, self.n)).p
        else:
            raise SpecError(f"model {self.model!r} has no single edge probability")
        return min(1.0, p * self.p_scale)

    def _intra_graphs(self) -> tuple[Graph, ...]:
        if self.intra == "empty":
            return ()
        if self.intra == "complete":
            return tuple(Graph.complete(self.n) for _ in range(self.k))
        if isinstance(self.intra, tuple):
            return tuple(Graph.from_edges(self.n, edges) for edges in self.intra)
        raise SpecError(f"unknown intra specification {self.intra!r}")

    def sample(self, seed: int) -> Graph:
        if self.model == "er":
            return randgen.sample_er(self.n, self.edge_probability(), seed)
        if self.model == "rin":
            params = randgen.RinParams(self.k, self.n, self.r, 0.0, self._intra_graphs())
            return randgen.sample_rin(params, seed, p=self.edge_probability())
        if self.model == "hetero":
            m = np.minimum(1.0, np.array(self.p_matrix, dtype=float) * self.p_scale)
            return randgen.sample_heterogeneous(m, seed)
        g, _ = randgen.two_clique_counterexample(self.n)
        return g


@dataclass(frozen=True)
class ThresholdSpec:
    """Either a fixed threshold for every node or a distribution to sample from.

    ``distribution="default"`` uses the log-decaying family with the given
    ``r`` and ``r_bar`` (``r`` defaults to the generator's ``r``); ``probs``
    gives an explicit distribution.
    """

    fixed: int | None = None
    distribution: str | None = None
    r: int | None = None
    r_bar: int | None = None
    probs: tuple[float, ...] | None = None

    def __post_init__(self):
        chosen = sum(x is not None for x in (self.fixed, self.distribution, self.probs))
        if chosen != 1:
            raise SpecError("thresholds need exactly one of fixed, distribution, probs")
        if self.distribution is not None and self.distribution != "default":
            raise SpecError(f"unknown threshold distribution {self.distribution!r}")
        if self.distribution == "default" and self.r_bar is None:
            raise SpecError("default threshold distribution needs r_bar")

    def resolve(self, gen: GeneratorSpec) -> randgen.ThresholdDistribution | None:
        if self.fixed is not None:
            return None
        if self.probs is not None:
            return randgen.ThresholdDistribution(tuple(self.probs))
        r = gen.r if self.r is None else self.r
        return randgen.default_threshold_distribution(gen.n, r, self.r_bar)

    def sample(self, gen: GeneratorSpec, total: int, seed: int) -> np.ndarray:
        dist = self.resolve(gen)
        if dist is None:
            t = np.full(total, self.fixed, dtype=np.int64)
        else:
            t = randgen.sample_thresholds(dist, total, seed)
        # thresholds at or above a node's degree all act alike; n-1 is the largest legal value
        return np.minimum(t, max(total - 1, 0))


@dataclass(frozen=True)
class TrialSpec:
    generator: GeneratorSpec
    thresholds: ThresholdSpec
    mode: str
    trials: int
    seed: int
    dynamics: dyn.DynamicsConfig = field(default_factory=dyn.DynamicsConfig)
    random_inits: int = 1
    bisections: int = 10
    min_degree_target: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise SpecError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.trials < 1:
            raise SpecError("trials must be positive")
        if self.seed < 0:
            raise SpecError("seed must be nonnegative")
        total = self.generator.total_nodes
        if self.mode in ("robust-exact", "consensus-witness-init") and total > EXACT_CAP:
            raise CapExceeded(f"n exceeds exact-check cap {EXACT_CAP}")
        if self.mode == "robust-halfsize" and total > HALFSIZE_CAP:
            raise CapExceeded(f"n exceeds halfsize cap {HALFSIZE_CAP}")
        if self.mode == "consensus-random-init" and self.random_inits + self.bisections < 1:
            raise SpecError("consensus-random-init needs at least one initial condition")

    @classmethod
    def from_json(cls, obj: dict) -> TrialSpec:
        obj = dict(obj)
        try:
            gen = dict(obj.pop("generator"))
            thr = dict(obj.pop("thresholds"))
            if thr.get("probs") is not None:
                thr["probs"] = tuple(thr["probs"])
            dcfg = dyn.DynamicsConfig(**obj.pop("dynamics", {}))
            return cls(GeneratorSpec(**gen), ThresholdSpec(**thr), dynamics=dcfg, **obj)
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed experiment spec: {exc}") from None

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    outcome: bool | None
    steps: int = 0
    ms: float = 0.0
    value: float | None = None
    error: str | None = None


def _consensus_runs(g: Graph, t: np.ndarray, inits: np.ndarray, cfg: dyn.DynamicsConfig):
    results = dyn.simulate_many(g, t, inits, cfg)
    ok = all(r.consensus for r in results)
    steps = max(r.steps for r in results)
    return ok, steps, max(r.final_gap for r in results)


def run_trial(spec: TrialSpec, index: int, timing: bool = False) -> TrialRecord:
    seed = trial_seed(spec.seed, index)
    start = time.perf_counter()
    steps = 0
    value: float | None = None
    try:
        g = spec.generator.sample(seed)
        t = spec.thresholds.sample(spec.generator, g.n, seed)
        mode = spec.mode
        if mode == "robust-exact":
            outcome = is_robust_exact(g, t).robust
        elif mode == "robust-halfsize":
            outcome = certify_robust_halfsize(g, t).certified
        elif mode == "connectivity":
            outcome = is_connected(g)
        elif mode == "min-degree":
            target = spec.generator.r if spec.min_degree_target is None else spec.min_degree_target
            value = min_degree(g)
            outcome = value >= target
        elif mode == "consensus-random-init":
            rng = generator(seed, Stream.INIT)
            inits = [dyn.uniform_random_init(g.n, rng) for _ in range(spec.random_inits)]
            inits += [dyn.random_bisection(g.n, rng) for _ in range(spec.bisections)]
            outcome, steps, value = _consensus_runs(g, t, np.array(inits), spec.dynamics)
        else:  # consensus-witness-init
            verdict = is_robust_exact(g, t)
            if verdict.robust:
                x0 = dyn.uniform_random_init(g.n, generator(seed, Stream.INIT))
            else:
                x0 = dyn.witness_initial_condition(*verdict.witness, g.n)
            outcome, steps, value = _consensus_runs(g, t, x0[None, :], spec.dynamics)
    except (CapExceeded, ValueError) as exc:
        return TrialRecord(index, seed, None, error=str(exc))
    ms = (time.perf_counter() - start) * 1000.0 if timing else 0.0
    return TrialRecord(index, seed, bool(outcome), int(steps), ms, None if value is None else float(value))


def _run_chunk(args) -> list[TrialRecord]:
    spec, indices, timing = args
    return [run_trial(spec, i, timing) for i in indices]


def run_trials(spec: TrialSpec, workers: int = 1, timing: bool = False) -> list[TrialRecord]:
    """Run every trial of ``spec``; results are ordered by trial index.

    ``timing=False`` writes ``ms = 0`` so reruns are byte-identical.
    """
    indices = list(range(spec.trials))
    if workers <= 1 or spec.trials == 1:
        return [run_trial(spec, i, timing) for i in indices]
    chunks = [indices[w::workers] for w in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_chunk, [(spec, c, timing) for c in chunks if c])
        records = [rec for part in parts for rec in part]
    return sorted(records, key=lambda r: r.trial)


@dataclass(frozen=True)
class Summary:
    trials: int
    successes: int
    errors: int
    fraction: float
    wilson95: tuple[float, float]
    mean_steps: float
    total_time: float

    def to_json(self) -> dict:
        d = asdict(self)
        d["wilson95"] = list(self.wilson95)
        return d


Z95 = NormalDist().inv_cdf(0.975)


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials < 1:
        raise ValueError("need at least one trial")
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    # the bounds are exactly 0 and 1 at the extremes; pin them against rounding
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def summarize(records: Sequence[TrialRecord]) -> Summary:
    """Success fraction over the trials that ran without error, with a Wilson 95% interval."""
    if not records:
        raise ValueError("cannot summarize an empty record list")
    valid = [r for r in records if r.error is None]
    errors = len(records) - len(valid)
    if not valid:
        raise ValueError("every trial failed")
    wins = sum(bool(r.outcome) for r in valid)
    return Summary(
        trials=len(valid),
        successes=wins,
        errors=errors,
        fraction=wins / len(valid),
        wilson95=wilson_interval(wins, len(valid)),
        mean_steps=sum(r.steps for r in valid) / len(valid),
        total_time=sum(r.ms for r in records) / 1000.0,
    )


@dataclass(frozen=True)
class SweepRow:
    grid_value: float
    fraction: float
    lo95: float
    hi95: float
    trials: int


def _at_grid_point(spec: TrialSpec, variable: str, value) -> TrialSpec:
    gen = spec.generator
    if variable == "c":
        gen = replace(gen, c=value, p=None)
    elif variable == "n":
        gen = replace(gen, n=int(value))
    elif variable == "p-scale":
        gen = replace(gen, p_scale=float(value))
    else:
        raise SpecError(f"unknown sweep variable {variable!r}; expected one of {', '.join(SWEEP_VARIABLES)}")
    return replace(spec, generator=gen)


def phase_sweep(
    spec: TrialSpec, variable: str, grid: Iterable, workers: int = 1
) -> list[SweepRow]:
    grid = list(grid)
    if not grid:
        raise SpecError("sweep grid is empty")
    rows = []
    for value in grid:
        s = summarize(run_trials(_at_grid_point(spec, variable, value), workers))
        rows.append(SweepRow(float(value), s.fraction, s.wilson95[0], s.wilson95[1], s.trials))
    return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def records_csv(records: Iterable[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "seed", "outcome", "steps", "ms"])
    for r in records:
        outcome = "error" if r.error is not None else int(bool(r.outcome))
        w.writerow([r.trial, r.seed, outcome, r.steps, f"{r.ms:.3f}"])
    return buf.getvalue()


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["grid_value", "fraction", "lo95", "hi95", "trials"])
    for r in rows:
        w.writerow([_fmt(r.grid_value), _fmt(r.fraction), _fmt(r.lo95), _fmt(r.hi95), r.trials])
    return buf.getvalue()


def load_spec(path) -> TrialSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise SpecError("experiment spec must be a JSON object")
    return TrialSpec.from_json(obj)
