"""Exact linear-optimization oracles ``argopt{c.x : x in X(p)}``.

The oracle classes below are the callables handed to
:func:`objlearn.core.run_online`: ``oracle(c, instance) -> OracleAnswer``.
"""

from __future__ import annotations

from ..core import Orientation
from .base import OracleAnswer, OracleBudgetExceeded, colex_key, tie_tol
from .brute import brute_force_oracle
from .knapsack import DEFAULT_NODE_CAP, KnapsackInstance, solve_knapsack_ip, solve_knapsack_lp
from .paths import Graph, GraphInstance, solve_shortest_path
from .pctsp import PctspInstance, solve_pctsp

__all__ = [
    "OracleAnswer", "OracleBudgetExceeded", "colex_key", "tie_tol",
    "brute_force_oracle", "KnapsackInstance", "solve_knapsack_ip",
    "solve_knapsack_lp", "Graph", "GraphInstance", "solve_shortest_path",
    "PctspInstance", "solve_pctsp", "KnapsackOracle", "ShortestPathOracle",
    "PctspOracle", "BruteForceOracle",
]


class KnapsackOracle:
    """Linear (``divisible=True``) or 0/1 knapsack oracle."""

    sense = Orientation.MAXIMIZE

    def __init__(self, divisible: bool = False, max_nodes: int | None = None,
                 method: str = "auto"):
        self.divisible = divisible
        self.max_nodes = DEFAULT_NODE_CAP if max_nodes is None else max_nodes
        self.method = method

    def __call__(self, c, inst: KnapsackInstance) -> OracleAnswer:
        if self.divisible:
            return solve_knapsack_lp(c, inst)
        return solve_knapsack_ip(c, inst, max_nodes=self.max_nodes, method=self.method)


class ShortestPathOracle:
    sense = Orientation.MINIMIZE

    def __call__(self, c, inst: GraphInstance) -> OracleAnswer:
        return solve_shortest_path(c, inst)


class PctspOracle:
    sense = Orientation.MAXIMIZE

    def __call__(self, c, inst: PctspInstance) -> OracleAnswer:
        return solve_pctsp(c, inst)


class BruteForceOracle:
    """Exhaustive oracle; ``sense`` only labels it for the run loop, the
    instance's own sense decides the direction of optimization."""

    def __init__(self, sense: Orientation = Orientation.MAXIMIZE):
        self.sense = sense

    def __call__(self, c, inst) -> OracleAnswer:
        return brute_force_oracle(c, inst)
