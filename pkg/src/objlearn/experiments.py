"""Stream generators, replication runner and summary statistics for the
knapsack, shortest-path and profitable-tour experiments.

Random numbers
--------------
Every replication draws from its own ``numpy.random.Generator`` backed by
PCG64 and seeded with ``SeedSequence(seed, spawn_key=(replication,))``
(see :func:`make_rng`).  A run is therefore reproducible from the
configuration's ``seed`` and the replication index alone, on any
platform.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .core import Bounds, Observation, RunLedger, run_online
from .learners import FtlLearner, MwuLearner, OgdLearner
from .lp import PolyhedralObjectiveSet
from .oracles import (Graph, GraphInstance, KnapsackInstance, KnapsackOracle, PctspInstance,
                      PctspOracle, ShortestPathOracle, colex_key, tie_tol)
from .oracles.knapsack import _colex_search
from .oracles.pctsp import edge_list
from .projections import FeasibleObjectiveSet, SignedSimplex, UnitSimplex

OD_RETRIES = 100


def make_rng(seed: int, replication: int = 0) -> np.random.Generator:
    """PCG64 generator for one replication of a seeded experiment."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(seed, spawn_key=(replication,))))


# -- knapsack ----------------------------------------------------------------

@dataclass
class KnapsackGenConfig:
    n: int = 50
    T: int = 500
    replications: int = 10
    seed: int = 0
    divisible: bool = True
    suboptimality_eps: float = 0.0

    def __post_init__(self):
        if self.n < 2 or self.T < 1:
            raise ValueError("need n >= 2 and T >= 1")
        if not 0 <= self.suboptimality_eps < 1:
            raise ValueError("suboptimality_eps must lie in [0, 1)")


def knapsack_instance(u, rng, divisible=False) -> KnapsackInstance:
    """Strongly correlated prices ``u_i + 100 + r_i`` and a uniform budget."""
    u = np.asarray(u)
    prices = u + 100 + rng.integers(-10, 11, size=u.shape[0])
    budget = rng.integers(1, int(prices.sum()))          # 1 .. sum(p) - 1
    return KnapsackInstance(prices.astype(float), float(budget), divisible)


def gen_knapsack_stream(cfg: KnapsackGenConfig, rng: np.random.Generator, oracle=None):
    """Hidden utilities and ``cfg.T`` observed customer choices.

    Utilities are integers in 1..1000; the hidden objective is their
    1-norm normalization while prices are built from the raw integers.
    Returns ``(c_true, observations)``.
    """
    oracle = oracle or KnapsackOracle(divisible=cfg.divisible)
    u = rng.integers(1, 1001, size=cfg.n)
    c_true = u / u.sum()
    stream = []
    for t in range(1, cfg.T + 1):
        inst = knapsack_instance(u, rng, cfg.divisible)
        x = oracle(c_true, inst).decision
        if cfg.suboptimality_eps > 0:
            x_seen = apply_suboptimality(x, cfg.suboptimality_eps, oracle, c_true, inst)
            stream.append(Observation(t, inst, x_seen, optimal_decision=x))
        else:
            stream.append(Observation(t, inst, x))
    return c_true, stream


def apply_suboptimality(x_opt, eps: float, oracle, c_true, inst):
    """A feasible decision worth at least ``(1 - eps)`` times the optimum.

    Knapsacks use the depth-first tie search with the lowered target and
    return its first hit; instances that can be enumerated return the
    first qualifying decision in tie-rule order.  ``x_opt`` is the
    fallback and always qualifies.
    """
    x_opt = np.asarray(x_opt, dtype=float)
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1)")
    if eps == 0:
        return x_opt
    c = np.asarray(c_true, dtype=float)
    opt = float(c @ x_opt)
    target = (1 - eps) * opt
    if isinstance(inst, KnapsackInstance):
        active = np.nonzero((c > 0) & (inst.prices <= inst.budget))[0]
        if active.size == 0:
            return x_opt
        try:
            return _colex_search(c, inst.prices, inst.budget, active,
                                 target - tie_tol(target), lambda: None)
        except RuntimeError:
            return x_opt
    if hasattr(inst, "enumerate_decisions"):
        X = np.asarray(inst.enumerate_decisions(), dtype=float)
        ok = X[X @ c >= target - tie_tol(target)]
        if len(ok):
            return min(ok, key=colex_key)
    return x_opt


def knapsack_bounds(cfg: KnapsackGenConfig, norm: str = "inf") -> Bounds:
    """``K`` for decisions in the unit cube: 1 in the max-norm, ``sqrt(n)``
    in the 2-norm; ``L = sqrt(2)`` for the simplex."""
    K = 1.0 if norm == "inf" else math.sqrt(cfg.n)
    return Bounds(K=K, n=cfg.n, T=cfg.T, L=math.sqrt(2.0))


# -- shortest paths ----------------------------------------------------------

@dataclass
class CongestionSchedule:
    """Travel-time multiplier on bottleneck arcs as a function of the round.

    ``kind`` is ``"none"``, ``"gradual"`` (linear build-up over rounds
    12..18, plateau at twice the free-flow time until round 29, linear
    decay until 36) or ``"abrupt"`` (``abrupt_factor`` times free flow for
    rounds 12..36).
    """

    kind: str = "none"
    bottleneck_fraction: float = 0.05
    abrupt_factor: float = 1000.0

    def __post_init__(self):
        if self.kind not in ("none", "gradual", "abrupt"):
            raise ValueError(f"unknown congestion schedule {self.kind!r}")
        if not 0 < self.bottleneck_fraction <= 1:
            raise ValueError("bottleneck_fraction must lie in (0, 1]")

    def factor(self, t: int) -> float:
        if self.kind == "gradual":
            if 12 <= t <= 18:
                return 1 + (t - 12) / 6
            if 19 <= t <= 29:
                return 2.0
            if 30 <= t <= 36:
                return 1 + (36 - t) / 6
            return 1.0
        if self.kind == "abrupt" and 12 <= t <= 36:
            return self.abrupt_factor
        return 1.0

    def costs(self, c_free, bottlenecks, t: int) -> np.ndarray:
        c = np.array(c_free, dtype=float)
        c[bottlenecks] *= self.factor(t)
        return c


@dataclass
class SpGenConfig:
    """Shortest-path stream settings.

    Without ``network_file`` a ``grid_rows`` x ``grid_cols`` grid with
    arcs in both directions and free-flow times Uniform[1, 10] is used.
    ``zone_threshold`` is passed to the TNTP parser.
    """

    T: int = 60
    schedule: CongestionSchedule = field(default_factory=CongestionSchedule)
    seed: int = 0
    grid_rows: int = 15
    grid_cols: int = 15
    network_file: Optional[str] = None
    zone_threshold: int = 0
    replications: int = 1

    def __post_init__(self):
        if isinstance(self.schedule, dict):
            self.schedule = CongestionSchedule(**self.schedule)
        if self.network_file is None and (self.grid_rows < 2 or self.grid_cols < 2):
            raise ValueError("a synthetic grid needs at least 2x2 nodes")


def grid_graph(rows: int, cols: int) -> Graph:
    """Bidirected grid; node ``r*cols + c``, arcs in node order."""
    arcs = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            for dr, dc in ((-1, 0), (0, -1), (0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols:
                    arcs.append((u, rr * cols + cc))
    return Graph.from_arcs(rows * cols, arcs)


def _simple_matrix(graph: Graph, cost):
    """Cheapest arc per node pair (lowest index on ties) as a CSR matrix."""
    best = {}
    for a, (u, v) in enumerate(zip(graph.tails.tolist(), graph.heads.tolist())):
        if u == v:
            continue
        if (u, v) not in best or cost[a] < cost[best[(u, v)]]:
            best[(u, v)] = a
    pairs = np.array(list(best.keys()), dtype=int).reshape(-1, 2)
    arc_of = np.array(list(best.values()), dtype=int)
    # csgraph treats explicit zeros as missing edges
    w = np.maximum(cost[arc_of], 1e-300)
    mat = csr_matrix((w, (pairs[:, 0], pairs[:, 1])), shape=(graph.node_count,) * 2)
    return mat, best


def shortest_path_counts(graph: Graph, cost) -> np.ndarray:
    """Number of all-pairs shortest paths (one per ordered pair) using each arc.

    For every source the shortest-path tree is taken from SciPy's
    Dijkstra; the paths through a tree arc ``u -> v`` are exactly those
    ending in the subtree below ``v``.
    """
    cost = np.asarray(cost, dtype=float)
    mat, arc_of = _simple_matrix(graph, cost)
    dist, pred = dijkstra(mat, directed=True, return_predecessors=True)
    counts = np.zeros(graph.arc_count)
    for s in range(graph.node_count):
        order = np.argsort(-dist[s], kind="stable")
        size = np.ones(graph.node_count)
        for v in order:
            p = pred[s, v]
            if p < 0 or not np.isfinite(dist[s, v]):
                continue
            size[p] += size[v]
            counts[arc_of[(p, v)]] += size[v]
    return counts


def bottleneck_arcs(graph: Graph, cost, fraction: float = 0.05) -> np.ndarray:
    """Indices of the ``ceil(fraction * arcs)`` arcs on most shortest paths
    (stable sort: lower arc index first among equal counts)."""
    counts = shortest_path_counts(graph, cost)
    k = max(1, math.ceil(fraction * graph.arc_count - 1e-9))
    order = np.lexsort((np.arange(graph.arc_count), -counts))
    return np.sort(order[:k])


@dataclass
class SpNetwork:
    graph: Graph
    free_flow: np.ndarray
    bottlenecks: np.ndarray


def sp_network(cfg: SpGenConfig, rng: np.random.Generator) -> SpNetwork:
    if cfg.network_file is None:
        graph = grid_graph(cfg.grid_rows, cfg.grid_cols)
        free = rng.uniform(1.0, 10.0, size=graph.arc_count)
    else:
        from .io import parse_tntp
        with open(cfg.network_file) as fh:
            net = parse_tntp(fh.read(), zone_threshold=cfg.zone_threshold)
        graph, free = net.graph(), net.free_flow
    return SpNetwork(graph, free, bottleneck_arcs(graph, free, cfg.schedule.bottleneck_fraction))


def gen_sp_stream(cfg: SpGenConfig, rng: Optional[np.random.Generator] = None,
                  network: Optional[SpNetwork] = None):
    """Per-round true travel times and the drivers' observed routes.

    The true objective of round ``t`` is the scheduled travel-time vector
    divided by the 1-norm of the free-flow times, so that the
    uncongested objective lies in the simplex.  Origin and destination
    are drawn uniformly among connected distinct pairs.

    Returns ``(c_true, observations)`` with ``c_true`` of shape (T, arcs).
    """
    rng = make_rng(cfg.seed) if rng is None else rng
    net = network or sp_network(cfg, rng)
    graph, free = net.graph, net.free_flow
    scale = free.sum()
    oracle = ShortestPathOracle()
    c_true = np.empty((cfg.T, graph.arc_count))
    stream = []
    for t in range(1, cfg.T + 1):
        c_true[t - 1] = cfg.schedule.costs(free, net.bottlenecks, t) / scale
        for _ in range(OD_RETRIES):
            s, d = rng.integers(0, graph.node_count, size=2)
            if s != d and np.isfinite(graph.distances(free, int(s))[d]):
                break
        else:
            raise RuntimeError(f"no connected origin/destination pair in {OD_RETRIES} draws")
        inst = GraphInstance(graph, int(s), int(d))
        stream.append(Observation(t, inst, oracle(c_true[t - 1], inst).decision))
    return c_true, stream


# -- profitable tour ---------------------------------------------------------

@dataclass
class PctspGenConfig:
    """Profitable-tour stream settings.

    Without explicit ``coords``/``prizes`` a synthetic instance is drawn:
    integer coordinates in [0, coord_range]^2 and integer prizes 1..100 (the
    depot gets none).  Prizes are multiplied by ``revenue_scale``; each
    round jitters costs and revenues uniformly by the given fractions.
    """

    node_count: int = 11
    # about 40k square units per node, the node density of berlin52
    coord_range: int = 650
    revenue_scale: float = 4.0
    cost_jitter: float = 0.10
    revenue_jitter: float = 0.20
    T: int = 200
    seed: int = 0
    replications: int = 1
    coords: Optional[list] = None
    prizes: Optional[list] = None
    instance_file: Optional[str] = None

    def __post_init__(self):
        if not 2 <= self.node_count <= 16:
            raise ValueError("node_count must lie in 2..16 (exact oracle capped at 16 nodes)")
        for j in (self.cost_jitter, self.revenue_jitter):
            if not 0 <= j < 1:
                raise ValueError("jitters must lie in [0, 1)")


def euclidean_edge_costs(coords) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    return np.array([np.linalg.norm(coords[i] - coords[j])
                     for i, j in edge_list(len(coords))])


def pctsp_base(cfg: PctspGenConfig, rng: np.random.Generator) -> PctspInstance:
    nv = cfg.node_count
    if cfg.instance_file is not None:
        from .io import parse_tsplib_lite
        with open(cfg.instance_file) as fh:
            parsed = parse_tsplib_lite(fh.read())
        if parsed.dimension != nv:
            raise ValueError(f"{cfg.instance_file} has {parsed.dimension} nodes, "
                             f"node_count is {nv}")
        return parsed.to_pctsp(cfg.revenue_scale)
    coords = (rng.integers(0, cfg.coord_range + 1, size=(nv, 2)) if cfg.coords is None
              else np.asarray(cfg.coords, dtype=float))
    prizes = (rng.integers(1, 101, size=nv - 1) if cfg.prizes is None
              else np.asarray(cfg.prizes, dtype=float))
    if len(coords) != nv or len(prizes) != nv - 1:
        raise ValueError("coords need node_count rows and prizes node_count - 1 entries")
    return PctspInstance(nv, euclidean_edge_costs(coords), cfg.revenue_scale * prizes)


def jitter_instance(base: PctspInstance, cfg: PctspGenConfig, rng) -> PctspInstance:
    costs = base.edge_costs * rng.uniform(1 - cfg.cost_jitter, 1 + cfg.cost_jitter,
                                          size=base.edge_costs.shape)
    revs = base.revenues * rng.uniform(1 - cfg.revenue_jitter, 1 + cfg.revenue_jitter,
                                       size=base.revenues.shape)
    return PctspInstance(base.node_count, costs, revs)


def gen_pctsp_stream(cfg: PctspGenConfig, rng: np.random.Generator, base=None):
    """Expected objective, per-round true objectives and observed tours.

    All objectives share one scale, the 1-norm of the unjittered
    objective, so ``c_expected`` has unit 1-norm and is the mean of the
    per-round objectives.  Returns ``(c_expected, c_true, observations)``.
    """
    base = pctsp_base(cfg, rng) if base is None else base
    raw = base.objective()
    scale = np.abs(raw).sum()
    oracle = PctspOracle()
    c_true = np.empty((cfg.T, base.n))
    stream = []
    for t in range(1, cfg.T + 1):
        inst = jitter_instance(base, cfg, rng)
        c_true[t - 1] = inst.objective() / scale
        stream.append(Observation(t, inst, oracle(c_true[t - 1], inst).decision))
    return raw / scale, c_true, stream


def pctsp_diameter_l2(node_count: int) -> float:
    """2-norm diameter bound of profitable-tour decisions.

    Node indicators differ in at most ``node_count`` places; a tour's edge
    part has squared norm at most ``max(node_count, 4)`` (a one-customer
    tour counts its edge twice), and two non-negative vectors are at most
    the root of their summed squared norms apart.
    """
    return math.sqrt(node_count + 2 * max(node_count, 4))


def noise_floor(c_expected, cfg: PctspGenConfig, rng, base: PctspInstance,
                rounds: int = 200) -> float:
    """Mean total error of always playing ``c_expected`` on fresh rounds."""
    oracle = PctspOracle()
    scale = np.abs(base.objective()).sum()
    total = 0.0
    for _ in range(rounds):
        inst = jitter_instance(base, cfg, rng)
        ct = inst.objective() / scale
        xbar = oracle(c_expected, inst).decision
        x = oracle(ct, inst).decision
        total += float((c_expected - ct) @ (xbar - x))
    return total / rounds


def pctsp_signs(node_count: int) -> np.ndarray:
    """``+1`` on the node block, ``-1`` on the edge block of the joint layout."""
    nv = node_count
    return np.concatenate([np.ones(nv), -np.ones(len(edge_list(nv)))])


# -- per-problem learning setup ----------------------------------------------

def objective_set(cfg, n: int) -> FeasibleObjectiveSet:
    """Set ``F`` the learners search: the unit simplex, sign-adjusted for
    the profitable tour's negative cost block."""
    if isinstance(cfg, PctspGenConfig):
        return SignedSimplex(pctsp_signs(cfg.node_count))
    return UnitSimplex(n)


def decision_bounds(cfg, n: int) -> tuple:
    """``(K_inf, K_2)``: bounds on ``|x - x'|`` in the max- and 2-norm."""
    if isinstance(cfg, PctspGenConfig):
        return 2.0, pctsp_diameter_l2(cfg.node_count)
    return 1.0, math.sqrt(n)


def problem_bounds(cfg, n: int, learner: str) -> Bounds:
    """The bound constants matching ``learner`` ("mwu" or an OGD name)."""
    k_inf, k_2 = decision_bounds(cfg, n)
    K = k_inf if learner == "mwu" else k_2
    return Bounds(K=K, n=n, T=cfg.T, L=objective_set(cfg, n).diameter_l2())


LEARNERS = ("mwu", "ogd-fixed", "ogd-dynamic", "lp-ftl")


def learner_factory(cfg, learner: str, G="K"):
    """``factory(n, T, sense)`` for :func:`run_replicated`.

    ``G`` is the OGD gradient bound: a number, ``"K"`` (the default) or
    ``"K^2"``.  ``lp-ftl`` needs the divisible knapsack, ``mwu`` a
    non-negative objective.
    """
    if learner not in LEARNERS:
        raise ValueError(f"unknown learner {learner!r}; choose from {', '.join(LEARNERS)}")
    if learner == "lp-ftl" and not (isinstance(cfg, KnapsackGenConfig) and cfg.divisible):
        raise ValueError("lp-ftl needs a polyhedral problem (knapsack-lp)")
    if learner == "mwu" and isinstance(cfg, PctspGenConfig):
        raise ValueError("mwu needs a non-negative objective; the profitable tour has costs")
    if not (G in ("K", "K^2") or (isinstance(G, (int, float)) and G > 0)):
        raise ValueError(f"G must be 'K', 'K^2' or a positive number, got {G!r}")

    def factory(n, T, sense):
        if learner == "mwu":
            return MwuLearner(n, T, sense)
        if learner == "lp-ftl":
            return FtlLearner(PolyhedralObjectiveSet.simplex(n), sense,
                              oracle=KnapsackOracle(divisible=True))
        K = decision_bounds(cfg, n)[1]
        g = K if G == "K" else K * K if G == "K^2" else float(G)
        return OgdLearner(objective_set(cfg, n), K, T, schedule=learner[4:], sense=sense, G=g)

    return factory


# -- replication and summaries -----------------------------------------------

@dataclass
class SummaryTable:
    """Mean and (population) standard deviation across replications of
    the running-average errors at each checkpoint."""

    checkpoints: list
    mean_objective: list
    std_objective: list
    mean_solution: list
    std_solution: list
    mean_total: list
    std_total: list
    replications: int = 0

    @classmethod
    def from_ledgers(cls, ledgers: Sequence[RunLedger], checkpoints) -> "SummaryTable":
        T = min(len(l) for l in ledgers)
        checkpoints = [int(c) for c in checkpoints]
        if any(c < 1 or c > T for c in checkpoints):
            raise ValueError(f"checkpoints must lie in 1..{T}")
        idx = np.array(checkpoints) - 1

        def stats(attr):
            vals = np.array([getattr(l, attr)[idx] for l in ledgers])
            return vals.mean(axis=0).tolist(), vals.std(axis=0).tolist()

        mo, so = stats("avg_objective")
        ms, ss = stats("avg_solution")
        mt, st = stats("avg_total")
        return cls(checkpoints, mo, so, ms, ss, mt, st, len(ledgers))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SummaryTable":
        return cls(**d)

    def format(self) -> str:
        rows = [("checkpoint", self.checkpoints)]
        for name in ("objective", "solution", "total"):
            rows.append((f"mean avg {name}", getattr(self, f"mean_{name}")))
            rows.append((f"std avg {name}", getattr(self, f"std_{name}")))
        lines = []
        for label, vals in rows:
            cells = "".join(f"{v:>10}" if isinstance(v, int) else f"{v:>10.4f}" for v in vals)
            lines.append(f"{label:<20}{cells}")
        return "\n".join(lines)


@dataclass
class ReplicatedRun:
    table: SummaryTable
    ledgers: list


def _generate(cfg, rng):
    """``(n, c_true, stream, oracle, strict)`` for one replication."""
    if isinstance(cfg, KnapsackGenConfig):
        oracle = KnapsackOracle(divisible=cfg.divisible)
        c_true, stream = gen_knapsack_stream(cfg, rng, oracle)
        return cfg.n, c_true, stream, oracle, cfg.suboptimality_eps == 0
    if isinstance(cfg, SpGenConfig):
        c_true, stream = gen_sp_stream(cfg, rng)
        return c_true.shape[1], c_true, stream, ShortestPathOracle(), True
    if isinstance(cfg, PctspGenConfig):
        _, c_true, stream = gen_pctsp_stream(cfg, rng)
        return c_true.shape[1], c_true, stream, PctspOracle(), True
    raise TypeError(f"unsupported configuration {type(cfg).__name__}")


def run_replicated(cfg, learner_factory: Callable, checkpoints=(5, 50, 500)) -> ReplicatedRun:
    """Run ``cfg.replications`` independent replications.

    ``learner_factory(n, T, sense)`` builds a fresh learner per
    replication.  Replication ``r`` uses ``make_rng(cfg.seed, r)``.
    """
    if cfg.replications < 1:
        raise ValueError("replications must be at least 1")
    ledgers = []
    for rep in range(cfg.replications):
        try:
            n, c_true, stream, oracle, strict = _generate(cfg, make_rng(cfg.seed, rep))
            learner = learner_factory(n, cfg.T, oracle.sense)
            ledgers.append(run_online(learner, oracle, stream, c_true, strict=strict))
        except Exception as exc:
            raise RuntimeError(
                f"replication {rep} failed (seed {cfg.seed}, spawn key {rep}): {exc}") from exc
    cps = [c for c in checkpoints if c <= cfg.T]
    return ReplicatedRun(SummaryTable.from_ledgers(ledgers, cps), ledgers)


def convergence_slope(ledger, window) -> float:
    """Least-squares slope of ``log(avg_total_t)`` against ``log t`` for
    ``t`` in the inclusive ``window``.

    ``ledger`` may be a :class:`RunLedger` or the running-average array.
    """
    avg = ledger.avg_total if isinstance(ledger, RunLedger) else np.asarray(ledger, dtype=float)
    lo, hi = window
    if not 1 <= lo < hi <= len(avg):
        raise ValueError(f"window {window} outside 1..{len(avg)}")
    t = np.arange(lo, hi + 1)
    y = avg[lo - 1:hi]
    if np.any(~(y > 0)):
        raise ValueError("running average not strictly positive on the window; narrow it")
    return float(np.polyfit(np.log(t), np.log(y), 1)[0])
