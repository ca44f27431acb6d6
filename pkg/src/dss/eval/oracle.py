from dataclasses import dataclass
import logging
from typing import Dict, Hashable, List, Optional, Tuple

from dss.errors import ConfigError, OracleBudgetError
from dss.radio.environment import NetworkState, env_step
from dss.scenarios.config import ScenarioConfig
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="eval/oracle.log",
)

EXHAUSTIVE_LIMIT = 10**7
DEFAULT_NODE_BUDGET = 10**7
_BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class OraclePlan:
    """
    :param actions: Best action sequence, lexicographically first among equal scores.
    :type actions: Tuple[int, ...]
    :param rewards: Rewards of the sequence.
    :type rewards: Tuple[float, ...]
    :param score: Sum of the rewards.
    :type score: float
    :param nodes: Environment steps spent.
    :type nodes: int
    :param method: "memoized", "exhaustive" or "branch_and_bound".
    :type method: str
    """

    actions: Tuple[int, ...]
    rewards: Tuple[float, ...]
    score: float
    nodes: int
    method: str

    def to_dict(self):
        return {
            "actions": list(self.actions),
            "rewards": list(self.rewards),
            "score": self.score,
            "nodes": self.nodes,
            "method": self.method,
        }


def _state_key(state: NetworkState) -> Hashable:
    # Future rewards only depend on the subframe and the buffer contents
    return (state.subframe_index, tuple(tuple(q.packets) for q in state.queues))


class _Planner:
    def __init__(self, horizon: int, action_count: int, node_budget: int):
        self.horizon = horizon
        self.action_count = action_count
        self.node_budget = node_budget
        self.nodes = 0

    def step(self, state: NetworkState, action: int) -> Tuple[NetworkState, float]:
        self.nodes += 1
        if self.nodes > self.node_budget:
            raise OracleBudgetError(
                f"Oracle exceeded its budget of {self.node_budget} nodes at horizon "
                f"{self.horizon}; shorten the horizon or raise the budget"
            )
        next_state, reward, _ = env_step(state, action)
        return next_state, reward


class _MemoizedPlanner(_Planner):
    """
    Exact search over distinct (subframe, buffers) states. Each state is
    expanded once and its best continuation reused.
    """

    def __init__(self, horizon: int, action_count: int, node_budget: int):
        super().__init__(horizon, action_count, node_budget)
        self.table: Dict[Hashable, Tuple[float, Tuple[int, ...], Tuple[float, ...]]] = {}

    def best(self, state: NetworkState, depth: int) -> Tuple[float, Tuple[int, ...], Tuple[float, ...]]:
        if depth == self.horizon:
            return 0.0, (), ()
        key = _state_key(state)
        if key in self.table:
            return self.table[key]
        best: Tuple[float, Tuple[int, ...], Tuple[float, ...]] = (-1.0, (), ())
        for action in range(self.action_count):
            next_state, reward = self.step(state, action)
            score, actions, rewards = self.best(next_state, depth + 1)
            if reward + score > best[0]:
                best = (reward + score, (action,) + actions, (reward,) + rewards)
        self.table[key] = best
        return best


class _TreePlanner(_Planner):
    """
    Depth-first enumeration of action sequences, optionally pruned with the
    bound that every remaining subframe earns at most 1.
    """

    def __init__(self, horizon: int, action_count: int, node_budget: int, prune: bool):
        super().__init__(horizon, action_count, node_budget)
        self.prune = prune
        self.best_score = -1.0
        self.best_actions: List[int] = []
        self.best_rewards: List[float] = []

    def run(self, state: NetworkState, depth: int, score: float, actions: List[int], rewards: List[float]):
        if depth == self.horizon:
            if score > self.best_score:
                self.best_score = score
                self.best_actions = list(actions)
                self.best_rewards = list(rewards)
            return
        if self.prune and score + (self.horizon - depth) <= self.best_score + _BOUND_SLACK:
            return
        for action in range(self.action_count):
            next_state, reward = self.step(state, action)
            actions.append(action)
            rewards.append(reward)
            self.run(next_state, depth + 1, score + reward, actions, rewards)
            actions.pop()
            rewards.pop()


def oracle_plan(
    scenario: ScenarioConfig,
    horizon: Optional[int] = None,
    seed: int = 0,
    node_budget: int = DEFAULT_NODE_BUDGET,
    memoize: bool = True,
) -> OraclePlan:
    """
    Exact maximizer of the summed reward over ``horizon`` subframes on the
    true environment.

    By default the search merges identical (subframe, buffers) states. With
    ``memoize=False`` every sequence is enumerated when N^horizon <= 10^7,
    beyond that branches are pruned with the bound r <= 1.

    :param scenario: Deterministic scenario to plan on.
    :type scenario: ScenarioConfig
    :param horizon: [Optional] Number of subframes, defaults to the episode length.
    :type horizon: Optional[int]
    :param seed: Episode seed, only relevant with Rayleigh fading.
    :type seed: int
    :param node_budget: Maximum number of environment steps.
    :type node_budget: int
    :param memoize: Whether identical states are searched once.
    :type memoize: bool
    :returns: The best plan.
    :rtype: OraclePlan
    :raises OracleBudgetError: When the budget is exhausted.
    """
    horizon = scenario.episode_length if horizon is None else horizon
    if not 0 <= horizon <= scenario.episode_length:
        raise ConfigError(
            f"Oracle horizon must be in [0, {scenario.episode_length}], got {horizon}"
        )
    root = NetworkState.initial(scenario, seed)
    if memoize:
        planner = _MemoizedPlanner(horizon, scenario.action_count, node_budget)
        score, actions, rewards = planner.best(root, 0)
        method = "memoized"
    else:
        exhaustive = scenario.action_count**horizon <= EXHAUSTIVE_LIMIT
        tree = _TreePlanner(horizon, scenario.action_count, node_budget, prune=not exhaustive)
        tree.run(root, 0, 0.0, [], [])
        planner = tree
        score, actions, rewards = tree.best_score, tuple(tree.best_actions), tuple(tree.best_rewards)
        method = "exhaustive" if exhaustive else "branch_and_bound"
    score = max(score, 0.0)
    logger.info(
        f"Oracle on {scenario.name} (N={scenario.action_count}, horizon={horizon}, {method}): "
        f"score {score:.6f} after {planner.nodes} nodes"
    )
    return OraclePlan(
        actions=tuple(actions),
        rewards=tuple(rewards),
        score=score,
        nodes=planner.nodes,
        method=method,
    )
