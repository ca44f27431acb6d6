from dataclasses import dataclass, field
import logging
import math
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray
import torch

from dss.errors import ConfigError
from dss.utils.logger import getLogger


logger: logging.Logger = getLogger(
    name=__name__,
    consoleLevel=logging.INFO,
    fileLevel=logging.DEBUG,
    log_file="planning/mcts.log",
)

# Process-wide instrumentation, read by execution-phase purity checks
search_invocations: Dict[str, int] = {"searches": 0, "simulations": 0}


@dataclass(frozen=True)
class SearchConfig:
    """
    :param num_simulations: Simulations N_mcts per search.
    :type num_simulations: int
    :param discount: Discount gamma of the backed up returns.
    :type discount: float
    :param pb_c_init: pUCT constant c1.
    :type pb_c_init: float
    :param pb_c_base: pUCT constant c2.
    :type pb_c_base: float
    :param dirichlet_alpha: Concentration of the root noise.
    :type dirichlet_alpha: float
    :param exploration_fraction: Weight of the noise in the root priors.
    :type exploration_fraction: float
    :param root_noise: Whether Dirichlet noise is mixed into the root priors.
    :type root_noise: bool
    :param temperature: Sampling temperature during data generation, 0 is greedy.
    :type temperature: float
    """

    num_simulations: int = 64
    discount: float = 0.99
    pb_c_init: float = 1.25
    pb_c_base: float = 19652.0
    dirichlet_alpha: float = 0.3
    exploration_fraction: float = 0.25
    root_noise: bool = True
    temperature: float = 1.0

    def validate(self) -> "SearchConfig":
        if self.num_simulations < 1:
            raise ConfigError(f"num_simulations must be >= 1, got {self.num_simulations}")
        if not 0.0 < self.discount <= 1.0:
            raise ConfigError(f"discount must be in (0, 1], got {self.discount}")
        if self.pb_c_base <= 0:
            raise ConfigError(f"pb_c_base must be > 0, got {self.pb_c_base}")
        if self.dirichlet_alpha <= 0:
            raise ConfigError(f"dirichlet_alpha must be > 0, got {self.dirichlet_alpha}")
        if not 0.0 <= self.exploration_fraction <= 1.0:
            raise ConfigError(
                f"exploration_fraction must be in [0, 1], got {self.exploration_fraction}"
            )
        if self.temperature < 0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        return self


class MinMaxStats:
    """
    Bounds of every return seen in the tree, used to map Q values onto [0, 1].
    """

    def __init__(self):
        self.maximum = -math.inf
        self.minimum = math.inf

    def update(self, value: float):
        self.maximum = max(self.maximum, value)
        self.minimum = min(self.minimum, value)

    def normalize(self, value: float) -> float:
        if self.maximum > self.minimum:
            value = (value - self.minimum) / (self.maximum - self.minimum)
        return min(max(value, 0.0), 1.0)


@dataclass
class SearchNode:
    """
    One node of the search tree; edge statistics live on the child.

    :param prior: Prior P(a) of the edge into this node.
    :type prior: float
    :param hidden_state: Learned state, set when the node is expanded.
    :type hidden_state: Any
    :param reward: Predicted reward r(a) of the edge into this node.
    :type reward: float
    :param visit_count: Visits N(a).
    :type visit_count: int
    :param value_sum: Sum of the returns G backed up through the edge.
    :type value_sum: float
    :param children: Children by action index.
    :type children: Dict[int, SearchNode]
    """

    prior: float
    hidden_state: Any = None
    reward: float = 0.0
    visit_count: int = 0
    value_sum: float = 0.0
    children: Dict[int, "SearchNode"] = field(default_factory=dict)

    def expanded(self) -> bool:
        return len(self.children) > 0

    def q_value(self) -> float:
        return self.value_sum / self.visit_count if self.visit_count > 0 else 0.0

    def expand(self, hidden_state: Any, reward: float, priors: Sequence[float]):
        self.hidden_state = hidden_state
        self.reward = reward
        for action, prior in enumerate(priors):
            self.children[action] = SearchNode(prior=float(prior))


@dataclass
class SearchResult:
    """
    Root statistics of one search.
    """

    visit_counts: NDArray
    priors: NDArray
    q_values: NDArray
    root_value: float

    @property
    def policy(self) -> NDArray:
        return self.visit_counts / self.visit_counts.sum()

    def to_dict(self) -> Dict:
        return {
            "visit_counts": [int(n) for n in self.visit_counts],
            "policy": [float(p) for p in self.policy],
            "priors": [float(p) for p in self.priors],
            "q_values": [float(q) for q in self.q_values],
            "root_value": float(self.root_value),
        }


def _to_numpy(x: Any) -> NDArray:
    if isinstance(x, torch.Tensor):
        return x.detach().cpu().numpy().astype(np.float64)
    return np.asarray(x, dtype=np.float64)


def _to_float(x: Any) -> float:
    return float(_to_numpy(x).reshape(-1)[0])


def puct_select(
    node: SearchNode, config: SearchConfig, min_max: Optional[MinMaxStats] = None
) -> int:
    """
    Picks the child maximizing

    Qnorm(a) + P(a) sqrt(sum_b N(b)) / (1 + N(a)) (c1 + ln((sum_b N(b) + c2 + 1) / c2)),

    with Qnorm = 0 for unvisited children. Ties go to the lowest action index.

    :param node: An expanded node.
    :type node: SearchNode
    :param config: Search constants.
    :type config: SearchConfig
    :param min_max: [Optional] Tree bounds used to normalize Q.
    :type min_max: Optional[MinMaxStats]
    :returns: The selected action index.
    :rtype: int
    """
    assert node.expanded(), "puct_select needs an expanded node"
    min_max = MinMaxStats() if min_max is None else min_max
    total_visits = sum(child.visit_count for child in node.children.values())
    exploration = math.sqrt(total_visits) * (
        config.pb_c_init + math.log((total_visits + config.pb_c_base + 1) / config.pb_c_base)
    )
    best_action, best_score = -1, -math.inf
    for action in sorted(node.children):
        child = node.children[action]
        q = min_max.normalize(child.q_value()) if child.visit_count > 0 else 0.0
        score = q + child.prior * exploration / (1 + child.visit_count)
        if score > best_score:
            best_action, best_score = action, score
    return best_action


def backup(
    path: List[SearchNode], leaf_value: float, config: SearchConfig, min_max: MinMaxStats
):
    """
    Propagates the leaf value to the root: walking up, G <- r + gamma G, and
    every edge on the path records G.

    :param path: Nodes from the root to the leaf.
    :type path: List[SearchNode]
    :param leaf_value: Value predicted at the leaf.
    :type leaf_value: float
    """
    value = leaf_value
    for node in reversed(path[1:]):
        value = node.reward + config.discount * value
        node.value_sum += value
        node.visit_count += 1
        min_max.update(value)
    path[0].visit_count += 1


def add_exploration_noise(
    node: SearchNode, config: SearchConfig, rng: np.random.Generator
):
    actions = sorted(node.children)
    noise = rng.dirichlet([config.dirichlet_alpha] * len(actions))
    fraction = config.exploration_fraction
    for action, n in zip(actions, noise):
        child = node.children[action]
        child.prior = child.prior * (1 - fraction) + n * fraction


def run_search(
    model: Any,
    observation: Any,
    config: SearchConfig,
    rng: np.random.Generator,
    add_noise: Optional[bool] = None,
) -> SearchResult:
    """
    Runs ``config.num_simulations`` simulations of select, expand and backup
    over the learned model. Only the root touches the observation; every
    deeper node comes from the dynamics function.

    :param model: Anything with ``initial_inference(obs) -> (s, p, v)`` and
        ``recurrent_inference(s, a) -> (s', r, p, v)``.
    :type model: Any
    :param observation: Flattened observation of the root.
    :type observation: Any
    :param config: Search constants.
    :type config: SearchConfig
    :param rng: Generator for the root noise.
    :type rng: np.random.Generator
    :param add_noise: [Optional] Overrides ``config.root_noise``.
    :type add_noise: Optional[bool]
    :returns: Visit counts, priors, Q values and the visit-weighted root value.
    :rtype: SearchResult
    """
    search_invocations["searches"] += 1
    with torch.no_grad():
        state, priors, _ = model.initial_inference(observation)
        root = SearchNode(prior=1.0)
        root.expand(state, 0.0, _to_numpy(priors).reshape(-1))
        root_priors = np.array([root.children[a].prior for a in sorted(root.children)])
        if config.root_noise if add_noise is None else add_noise:
            add_exploration_noise(root, config, rng)
        min_max = MinMaxStats()

        for _ in range(config.num_simulations):
            search_invocations["simulations"] += 1
            node = root
            path = [node]
            action = -1
            while node.expanded():
                action = puct_select(node, config, min_max)
                node = node.children[action]
                path.append(node)
            parent = path[-2]
            next_state, reward, policy, value = model.recurrent_inference(
                parent.hidden_state, action
            )
            node.expand(next_state, _to_float(reward), _to_numpy(policy).reshape(-1))
            backup(path, _to_float(value), config, min_max)

    actions = sorted(root.children)
    visits = np.array([root.children[a].visit_count for a in actions], dtype=np.float64)
    q_values = np.array([root.children[a].q_value() for a in actions])
    root_value = float(np.dot(visits, q_values) / visits.sum())
    return SearchResult(
        visit_counts=visits,
        priors=root_priors,
        q_values=q_values,
        root_value=root_value,
    )


def sample_action(
    policy: Sequence[float], temperature: float, rng: np.random.Generator
) -> int:
    """
    Samples an action with probability proportional to pi^(1/tau); tau = 0
    returns the argmax (lowest index on ties).

    The policy is divided by its maximum before the power, so the largest
    weight stays 1 and tiny temperatures cannot underflow to all zeros.
    """
    pi = np.asarray(policy, dtype=np.float64)
    if temperature == 0:
        return int(np.argmax(pi))
    weights = (pi / pi.max()) ** (1.0 / temperature)
    weights = weights / weights.sum()
    return int(rng.choice(len(weights), p=weights))
