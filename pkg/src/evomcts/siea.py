"""(1, lambda) evolution of selection formulas with semantic tie-breaking.

A candidate selection formula is scored by running a short burst of
search iterations with it and averaging the rollout rewards; the vector
of per-iteration rewards is kept as the individual's *semantics*.  When
several offspring tie on fitness, the winner is the one whose semantics
sit just past a lower distance bound from the parent's: different
enough to move, not so different as to be noise.  With Bernoulli
rewards the semantic distance never exceeds 1, so under the default
bounds (alpha=5, beta=10) the semantic branch is inert and fitness ties
fall through to a uniform random pick; the bounds are configuration
values precisely so that narrower ones can be tried.

The strategy is comma-selection: the parent never competes with its
offspring, and the formula used after evolution is the best-of-run by
fitness (most recent on ties), not the final parent, since a comma
strategy can walk away from its best individual.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .expr import DEFAULT_MAX_DEPTH, Expression, mutate, uct_seed
from .mcts import ExpressionPolicy, SearchNode, create_root, run_iteration, run_search

__all__ = [
    "Individual",
    "EvolutionConfig",
    "ssd",
    "ssi",
    "evaluate_individual",
    "select_parent",
    "evolve",
    "run_siea_search",
]


@dataclass
class Individual:
    """A selection formula with its evaluation results.

    ``fitness``/``semantics`` are None for the initial, never-evaluated
    parent: the evaluation budget belongs entirely to offspring.
    """

    expression: Expression
    fitness: float | None = None
    semantics: list | None = None


@dataclass
class EvolutionConfig:
    """Knobs of the evolutionary run (defaults are the reference setup)."""

    mu: int = 1
    lambda_: int = 4
    generations: int = 20
    sims_per_eval: int = 30
    alpha: float = 5.0
    beta: float = 10.0
    max_depth: int = DEFAULT_MAX_DEPTH

    def __post_init__(self):
        if self.mu != 1:
            raise ValueError("only a single-parent (mu=1) strategy is supported")
        if self.lambda_ < 1:
            raise ValueError("lambda_ must be >= 1")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.sims_per_eval < 1:
            raise ValueError("sims_per_eval must be >= 1")
        if not self.alpha < self.beta:
            raise ValueError("alpha must be < beta")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")

    @property
    def eval_budget(self) -> int:
        """Reward draws consumed by one evolutionary run."""
        return self.generations * self.lambda_ * self.sims_per_eval


def ssd(p: list, q: list) -> float:
    """Mean absolute difference between two equal-length reward vectors."""
    if len(p) != len(q):
        raise ValueError(f"semantics lengths differ: {len(p)} vs {len(q)}")
    if not p:
        raise ValueError("semantics must be non-empty")
    return sum(abs(a - b) for a, b in zip(p, q)) / len(p)


def ssi(p: list, q: list, alpha: float, beta: float) -> bool:
    """True when the semantic distance lies strictly between the bounds."""
    return alpha < ssd(p, q) < beta


def evaluate_individual(
    expression: Expression,
    base_tree: SearchNode,
    env,
    sims: int,
    rng: random.Random,
) -> Individual:
    """Score a formula by running ``sims`` search iterations with it.

    Works on a deep copy of ``base_tree`` (which is left untouched) and
    discards the copy afterwards; only the reward trace survives.
    Semantics entry i is the rollout reward of iteration i, fitness is
    their mean.
    """
    if sims < 1:
        raise ValueError("sims must be >= 1")
    tree = base_tree.clone()
    policy = ExpressionPolicy(expression)
    semantics = []
    for _ in range(sims):
        before = tree.total_reward
        run_iteration(tree, policy, env, rng)
        semantics.append(tree.total_reward - before)
    return Individual(expression, sum(semantics) / sims, semantics)


def _select_index(offspring, parent, alpha, beta, rng):
    """Pick the next parent among offspring; returns (index, branch).

    Branches: "unique_best" (single fitness maximum), "semantic" (among
    tied maxima, the one whose distance to the parent exceeds alpha but
    stays below beta, closest to alpha), "random" (tied maxima, no
    semantically eligible candidate or no parent semantics to compare
    against).  The RNG is consulted only on genuine ties.
    """
    best_fitness = max(o.fitness for o in offspring)
    top = [i for i, o in enumerate(offspring) if o.fitness == best_fitness]
    if len(top) == 1:
        return top[0], "unique_best"
    if parent.semantics is None:
        return top[rng.randrange(len(top))], "random"
    eligible = []
    for i in top:
        d = ssd(offspring[i].semantics, parent.semantics)
        if alpha < d < beta:
            eligible.append((i, abs(d - alpha)))
    if eligible:
        closest = min(gap for _, gap in eligible)
        ties = [i for i, gap in eligible if gap == closest]
        return (ties[0] if len(ties) == 1 else ties[rng.randrange(len(ties))]), "semantic"
    return top[rng.randrange(len(top))], "random"


def select_parent(
    offspring: list,
    parent: Individual,
    alpha: float,
    beta: float,
    rng: random.Random,
) -> Individual:
    """Comma-selection step; always returns a member of the offspring
    max-fitness set (see ``_select_index`` for the tie-break ladder)."""
    if not offspring:
        raise ValueError("offspring must be non-empty")
    index, _ = _select_index(offspring, parent, alpha, beta, rng)
    return offspring[index]


def evolve(env, config: EvolutionConfig, rng: random.Random):
    """Run the evolutionary loop; returns (best_individual, history).

    Every offspring in every generation is evaluated against a deep copy
    of the same fresh root-only tree, so fitness differences come from
    the formulas alone.  Exactly ``config.eval_budget`` reward draws are
    consumed.  ``history`` holds one JSON-ready record per generation:
    parent, all offspring with fitness and distance-to-parent, the
    selected index and which branch selected it.  Best-of-run is by
    fitness with ties going to the most recently evaluated individual;
    with zero generations it is the initial UCB1 seed itself.
    """
    base_tree = create_root(env)
    parent = Individual(uct_seed(math.sqrt(2.0)))
    best = parent
    history: list = []
    for generation in range(1, config.generations + 1):
        exprs = [mutate(parent.expression, rng, config.max_depth) for _ in range(config.lambda_)]
        offspring = [
            evaluate_individual(e, base_tree, env, config.sims_per_eval, rng) for e in exprs
        ]
        index, branch = _select_index(offspring, parent, config.alpha, config.beta, rng)
        for child in offspring:
            if best.fitness is None or child.fitness >= best.fitness:
                best = child
        history.append(
            {
                "generation": generation,
                "parent_expr": str(parent.expression),
                "parent_fitness": parent.fitness,
                "offspring": [
                    {
                        "expr": str(child.expression),
                        "fitness": child.fitness,
                        "ssd_to_parent": (
                            None
                            if parent.semantics is None
                            else ssd(child.semantics, parent.semantics)
                        ),
                    }
                    for child in offspring
                ],
                "selected_index": index,
                "selection_branch": branch,
            }
        )
        parent = offspring[index]
    return best, history


def run_siea_search(
    env,
    config: EvolutionConfig,
    post_iterations: int = 2600,
    rng: random.Random | None = None,
):
    """Evolve a formula, then search a fresh tree with it.

    Returns ``(root, expansion_log, best, history)``: the final tree and
    expansion log of the post-evolution search (``post_iterations``
    iterations), the best-of-run individual whose formula drove it, and
    the per-generation history.  Total reward draws are exactly
    ``config.eval_budget + post_iterations``.
    """
    if rng is None:
        raise ValueError("an explicit random.Random is required")
    best, history = evolve(env, config, rng)
    root, log = run_search(env, ExpressionPolicy(best.expression), post_iterations, rng)
    return root, log, best, history
