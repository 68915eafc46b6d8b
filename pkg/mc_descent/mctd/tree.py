"""
Monte Carlo Tree Descent.

Each tree node owns a local search: a sample set, its best point, a trust
region and a short history of per-call improvements. One iteration

1. selects a node by descending from the root with a UCT score that rewards
   low best values and recent improvement, expanding the tree when an
   artificial exploration child (at a branch) or the leaf test (at a leaf)
   says so (a leaf is only tested once it has been optimized at least once),
2. optimizes the node with STP descent followed by trust-region BO,
3. backs the node's best value up to the root.
"""

import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from mc_descent.config import MctdConfig, UctParams
from mc_descent.errors import BudgetExhaustedError, ContractViolationError, IllConditionedError, InsufficientDataError
from mc_descent.harness.trace import RunTrace, TraceRecorder
from mc_descent.mctd.descent import descend
from mc_descent.mctd.domain import Objective, Sample, evaluate, sample_uniform
from mc_descent.mctd.gp import GpModel, correlation_scalar, fit_gp
from mc_descent.mctd.local_bo import TrustRegion, init_tr, local_bo_run

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class TreeNode:
    id: int
    level: int
    anchor: np.ndarray
    trust_region: TrustRegion
    dy_history: deque[float]
    parent: "TreeNode | None" = field(default=None, repr=False)
    children: list["TreeNode"] = field(default_factory=list, repr=False)
    samples: list[Sample] = field(default_factory=list, repr=False)
    best: Sample | None = None
    visits: int = 0
    # Completed optimize_node passes; a leaf with none is always optimized before it may expand.
    iterations: int = 0

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def best_y(self) -> float:
        if self.best is None:
            raise ContractViolationError(f"node {self.id} has no samples")
        return self.best.y

    def add_sample(self, sample: Sample) -> None:
        self.samples.append(sample)
        if self.best is None or sample.y < self.best.y:
            self.best = sample

    def observe(self, sample: Sample) -> None:
        """Account for a sample already in `samples`: update the best and log the improvement."""
        previous = self.best_y
        if sample.y < previous:
            self.best = sample
        self.dy_history.append(max(previous - self.best_y, 0.0))

    def recent_improvement(self, window: int) -> float:
        if window <= 0:
            return 0.0
        return float(sum(list(self.dy_history)[-window:]))


def uct_child(child: TreeNode, parent_visits: int, p: UctParams) -> float:
    """-y* + C_d * (last J improvements) + C_p * sqrt(ln(N_parent) / N_child)."""
    if child.visits < 1:
        raise ContractViolationError(f"uct_child needs a visited child, node {child.id} has 0 visits")
    exploration = math.sqrt(math.log(max(parent_visits, 1)) / child.visits)
    return -child.best_y + p.c_d * child.recent_improvement(p.j) + p.c_p * exploration


def uct_explore(branch: TreeNode, p: UctParams) -> float:
    """Score of the artificial exploration child: mean of -y* over children plus C'_p * sqrt(ln N_branch)."""
    if branch.is_leaf:
        raise ContractViolationError("uct_explore needs a branch with at least one child")
    mean_neg_best = -sum(c.best_y for c in branch.children) / len(branch.children)
    return mean_neg_best + p.c_p_prime * math.sqrt(math.log(max(branch.visits, 1)))


def leaf_expand_pred(leaf: TreeNode, p: UctParams) -> bool:
    """Expand iff -y* + C''_d * (last J'' improvements) < C''_p * sqrt(ln N_leaf)."""
    exploitation = -leaf.best_y + p.c_d_dprime * leaf.recent_improvement(p.j_dprime)
    return exploitation < p.c_p_dprime * math.sqrt(math.log(max(leaf.visits, 1)))


def branch_decision(branch: TreeNode, p: UctParams) -> int | None:
    """
    Index of the child to descend into, or None when the exploration child
    wins. Ties go to the oldest child; the exploration child must win strictly.
    """
    scores = [uct_child(c, branch.visits, p) for c in branch.children]
    best = max(range(len(scores)), key=scores.__getitem__)
    if uct_explore(branch, p) > scores[best]:
        return None
    return best


class MonteCarloTreeDescent:
    """One tree over one objective; not shared across runs."""

    def __init__(
        self,
        obj: Objective,
        params: UctParams,
        config: MctdConfig,
        rng: np.random.Generator,
    ) -> None:
        self.obj = obj
        self.params = params
        self.config = config
        self.rng = rng
        self.nodes: list[TreeNode] = []
        self.root: TreeNode | None = None
        # Node id returned by select(), one entry per iteration.
        self.selection_log: list[int] = []
        self.current_node: int = -1
        self._dy_window = max(params.j, params.j_dprime)

    @property
    def oracle_threshold(self) -> int:
        return self.config.tree.oracle_threshold_for(self.obj.box.dim)

    def _new_node(
        self,
        level: int,
        anchor: np.ndarray,
        parent: TreeNode | None = None,
        trust_region: TrustRegion | None = None,
        dy_history: list[float] | None = None,
        visits: int = 0,
    ) -> TreeNode:
        node = TreeNode(
            id=len(self.nodes),
            level=level,
            anchor=np.array(anchor, dtype=float),
            trust_region=trust_region or init_tr(self.config.trust_region),
            dy_history=deque(dy_history or [], maxlen=self._dy_window),
            parent=parent,
            visits=visits,
        )
        self.nodes.append(node)
        if parent is not None:
            parent.children.append(node)
        return node

    def seed_root(self) -> TreeNode:
        x0 = sample_uniform(self.obj.box, self.rng)
        self.current_node = 0
        sample = evaluate(self.obj, x0)
        root = self._new_node(level=0, anchor=sample.x)
        root.add_sample(sample)
        self.root = root
        return root

    def select(self) -> TreeNode:
        """
        Walk from the root, bumping visits on every node entered, and return
        the node to optimize. Expansion happens on the way when the
        exploration child wins at a branch or the leaf test fires. A leaf
        that has never been optimized (the root at start, a fresh inheritor)
        is returned as is.
        """
        if self.root is None:
            raise ContractViolationError("select() on an empty tree")
        node = self.root
        while True:
            node.visits += 1
            if node.is_leaf:
                if node.iterations > 0 and leaf_expand_pred(node, self.params):
                    return self.expand(node)
                return node
            choice = branch_decision(node, self.params)
            if choice is None:
                return self.expand(node)
            node = node.children[choice]

    def expansion_offset(self, level: int) -> np.ndarray:
        """
        Signed per-dimension offset whose magnitude is uniform in
        [min, max] * width * exp(-level), floored at `expand_floor_fraction` * width.
        """
        tree = self.config.tree
        widths = self.obj.box.widths
        decay = math.exp(-level)
        low = np.maximum(tree.expand_min_fraction * decay, tree.expand_floor_fraction) * widths
        high = np.maximum(tree.expand_max_fraction * decay, tree.expand_floor_fraction) * widths
        magnitude = self.rng.uniform(low, high)
        sign = self.rng.choice([-1.0, 1.0], size=widths.size)
        return sign * magnitude

    def _exploration_anchor(self, node: TreeNode) -> np.ndarray:
        origin = node.best.x
        box = self.obj.box
        candidate = origin
        for _ in range(self.config.tree.anchor_retries):
            offset = self.expansion_offset(node.level)
            candidate = box.clip(origin + offset)
            # Redraw when clipping swallowed more than half of the move.
            if np.linalg.norm(candidate - origin) >= 0.5 * np.linalg.norm(offset):
                return candidate
        return candidate

    def _nearest_samples(self, node: TreeNode) -> list[Sample]:
        box = self.obj.box
        unit = box.to_unit(np.array([s.x for s in node.samples]))
        distances = cdist(box.to_unit(node.best.x).reshape(1, -1), unit)[0]
        order = np.argsort(distances, kind="stable")[: self.oracle_threshold]
        return [node.samples[i] for i in order]

    def expand(self, node: TreeNode) -> TreeNode:
        """
        Add an exploration child to `node` and return it.

        A leaf first gets an inheritor child anchored at its best point that
        takes over its visits, trust region, improvement history and nearest
        samples. The exploration child's anchor is evaluated before the tree
        changes, so running out of budget leaves the tree as it was.
        """
        anchor = self._exploration_anchor(node)
        self.current_node = len(self.nodes) + (1 if node.is_leaf else 0)
        seed = evaluate(self.obj, anchor)

        if node.is_leaf:
            inheritor = self._new_node(
                level=node.level + 1,
                anchor=node.best.x,
                parent=node,
                trust_region=TrustRegion(
                    length=node.trust_region.length,
                    success_streak=node.trust_region.success_streak,
                    failure_streak=node.trust_region.failure_streak,
                ),
                dy_history=list(node.dy_history),
                visits=node.visits,
            )
            for sample in self._nearest_samples(node):
                inheritor.add_sample(sample)

        explorer = self._new_node(level=node.level + 1, anchor=seed.x, parent=node, visits=1)
        explorer.add_sample(seed)
        logger.debug("expanded node %d (level %d): new node %d, y=%.6g", node.id, node.level, explorer.id, seed.y)
        return explorer

    def _fit_oracle(self, node: TreeNode) -> tuple[GpModel | None, float]:
        if len(node.samples) < self.oracle_threshold:
            return None, 1.0
        gp = self.config.gp
        try:
            model = fit_gp(node.samples[-gp.train_cap:], self.obj.box, self.rng, gp)
        except (IllConditionedError, InsufficientDataError) as e:
            logger.debug("node %d oracle fit failed, descending without it: %s", node.id, e)
            return None, 1.0
        descent = self.config.descent
        return model, correlation_scalar(model, descent.corr_scalar_min, descent.corr_scalar_max)

    def optimize_node(self, node: TreeNode) -> None:
        """Spend one iteration budget on `node`: STP descent, then trust-region BO."""
        obj = self.obj
        budget = self.config.tree.iteration_budget
        if obj.remaining is not None:
            budget = min(budget, obj.remaining)
        descent_calls, bo_calls = self.config.tree.split(budget)
        self.current_node = node.id
        start = len(node.samples)

        if descent_calls > 0 and not obj.optimum_reached:
            model, corr = self._fit_oracle(node)
            descend(
                node.samples,
                node.best,
                node.visits,
                node.level,
                obj,
                self.config.descent,
                descent_calls,
                self.rng,
                model=model,
                corr_scalar=corr,
            )
        if bo_calls > 0 and not obj.exhausted and not obj.optimum_reached:
            outcome = local_bo_run(
                node.samples,
                node.trust_region,
                obj,
                bo_calls,
                self.rng,
                self.config.trust_region,
                self.config.gp,
            )
            node.trust_region = outcome.trust_region

        for sample in sorted(node.samples[start:], key=lambda s: s.index):
            node.observe(sample)
        node.iterations += 1

    def backup(self, node: TreeNode) -> None:
        """Propagate `node`'s best to the root; every ancestor logs an improvement, zero or not."""
        child, parent = node, node.parent
        while parent is not None:
            previous = parent.best_y
            if child.best_y < previous:
                parent.add_sample(child.best)
            parent.dy_history.append(max(previous - parent.best_y, 0.0))
            child, parent = parent, parent.parent

    def run(self) -> None:
        if self.root is None:
            self.seed_root()
        obj = self.obj
        while not obj.exhausted and not obj.optimum_reached:
            calls_before = obj.eval_count
            try:
                node = self.select()
                self.selection_log.append(node.id)
                self.optimize_node(node)
            except BudgetExhaustedError:
                break
            self.backup(node)
            if obj.eval_count == calls_before:
                logger.warning("iteration on node %d made no evaluations, stopping", node.id)
                break
        if obj.optimum_reached:
            logger.info("known optimum reached after %d evaluations", obj.eval_count)

    def tree_summary(self) -> list[dict]:
        return [
            {
                "id": n.id,
                "parent": n.parent.id if n.parent is not None else None,
                "level": n.level,
                "visits": n.visits,
                "iterations": n.iterations,
                "best_y": n.best_y,
                "samples": len(n.samples),
                "children": [c.id for c in n.children],
            }
            for n in self.nodes
        ]


def mctd_run(
    obj: Objective,
    params: UctParams,
    config: MctdConfig,
    max_evals: int,
    rng: np.random.Generator,
) -> RunTrace:
    """
    Run MCTD on `obj` until `max_evals` ground-truth calls are spent or the
    known optimum is found. `params` drives the node scores; everything else
    comes from `config`.
    """
    if max_evals < 1:
        raise ContractViolationError("mctd_run needs max_evals >= 1")
    obj.max_evals = obj.eval_count + max_evals
    engine = MonteCarloTreeDescent(obj, params, config, rng)
    recorder = TraceRecorder(tag=lambda: f"n{engine.current_node}")
    obj.listeners.append(recorder)
    started = time.perf_counter()
    try:
        engine.run()
    finally:
        obj.listeners.remove(recorder)
    logger.info("mctd finished: %d evaluations, %d iterations, %d nodes, best %.6g",
                obj.eval_count, len(engine.selection_log), len(engine.nodes), obj.best.y)
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("selected nodes: %s", " ".join(map(str, engine.selection_log)))
        for row in engine.tree_summary():
            logger.debug(
                "node %(id)d: parent=%(parent)s level=%(level)d visits=%(visits)d iterations=%(iterations)d "
                "best=%(best_y).6g samples=%(samples)d",
                row,
            )
    return recorder.trace(
        wall_time=time.perf_counter() - started,
        benchmark=obj.name,
        algorithm="mctd",
        selections=list(engine.selection_log),
    )


__all__ = [
    "TreeNode",
    "uct_child",
    "uct_explore",
    "leaf_expand_pred",
    "branch_decision",
    "MonteCarloTreeDescent",
    "mctd_run",
]
