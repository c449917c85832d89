"""
Neighbor discovery and the failure-prone exchange of interrobot-factor messages.

Interrobot factors are rows of the shared graph, added and removed as pairs come into
and leave comms range.
"""
from __future__ import annotations
from typing import Sequence
import itertools

import numpy as np
from scipy.spatial.distance import pdist

from src.config import DEBUG_CONFIG
from src.schemas import FactorKind
from src.gbp.factors import InterrobotModel
from src.gbp.graph import FactorGraph, factor_update, variable_update
from src.robots.robot import Robot
from src.utils.diagnostics import build_debug_logger

Pair = tuple[int, int]

_dbg_offline = build_debug_logger(
    cfg=DEBUG_CONFIG,
    domain_path="robots.comms",
    key="print_offline"
)

class CommsChannel:
    """
    Per-timestep Bernoulli(gamma) shutdown draw for every robot, in robot-id order.
    An offline robot neither sends nor receives interrobot messages that timestep.
    """
    def __init__(self, gamma: float, rng: np.random.Generator):
        if not (0.0 <= gamma <= 1.0):
            raise ValueError(f"gamma must be in [0, 1], got {gamma}")
        self.gamma = float(gamma)
        self.rng = rng
        self.draws = 0
        self.offline_draws = 0
        self.online: dict[int, bool] = {}

    def draw(self, robot_ids: Sequence[int]) -> dict[int, bool]:
        ids = sorted(int(r) for r in robot_ids)
        u = self.rng.random(len(ids))
        self.online = {rid: bool(x >= self.gamma) for rid, x in zip(ids, u)}

        offline = [rid for rid, up in self.online.items() if not up]
        self.draws += len(ids)
        self.offline_draws += len(offline)
        if offline:
            _dbg_offline(f"offline: {offline}")

        return self.online

    def is_online(self, robot_id: int) -> bool:
        return self.online.get(robot_id, False)

    @property
    def offline_fraction(self) -> float | None:
        if self.draws == 0:
            return None
        return self.offline_draws / self.draws


class InterrobotNetwork:
    """
    Interrobot factors of one shared graph, kept in its "ir" batch: one row per
    neighbor pair per horizon offset k >= 1 (variable k of a with variable k of b).
    Each pair's rows carry the pair's link id as their group.
    """
    def __init__(
        self,
        graph: FactorGraph,
        *,
        sigma: float,
        d_i: float,
        damping: float=0.0
    ):
        self.graph = graph
        self.sigma = float(sigma)
        self.damping = float(damping)
        self.batch = graph.ensure_batch("ir", FactorKind.INTERROBOT, InterrobotModel(d_i), arity=2)
        self.links: dict[Pair, int] = {}
        self.messages = 0
        self._ids = itertools.count()

    def pairs(self) -> list[Pair]:
        return sorted(self.links)

    def rows_of(self, pair: Pair) -> slice:
        link = self.links.get(tuple(sorted(pair)))
        return slice(0, 0) if link is None else self.batch.rows_of(link)

    def connect(self, a: Robot, b: Robot) -> None:
        if a.id > b.id:
            a, b = b, a
        pair = (a.id, b.id)
        if pair in self.links:
            return
        if a.graph is not self.graph or b.graph is not self.graph:
            raise ValueError(f"Robots {pair} do not live in this network's graph")

        k_vars = min(a.num_variables, b.num_variables)
        k = np.arange(1, k_vars)
        link = next(self._ids)
        self.batch.append(
            link, np.column_stack([a.vars.start + k, b.vars.start + k]), sigma=self.sigma
        )
        self.links[pair] = link

    def disconnect(self, pair: Pair) -> None:
        self._remove([pair])

    def drop_robot(self, robot_id: int) -> None:
        self._remove([p for p in self.links if robot_id in p])

    def _remove(self, pairs: Sequence[Pair]) -> None:
        links = [self.links.pop(p) for p in pairs if p in self.links]
        if links:
            self.batch.remove_groups(links)

    def sync(self, robots: dict[int, Robot], pairs: Sequence[Pair]) -> None:
        """Create factors for new pairs and remove factors of pairs no longer in range."""
        wanted = set(pairs)
        self._remove([p for p in self.pairs() if p not in wanted])
        for a, b in sorted(wanted):
            self.connect(robots[a], robots[b])


def neighbor_discovery(
    robots: Sequence[Robot],
    comms_radius: float,
    network: InterrobotNetwork | None=None
) -> list[Pair]:
    """
    Unordered pairs (a < b) of active robots strictly closer than comms_radius. When a
    network is given its factors are synchronized to the result.
    """
    active = sorted((r for r in robots if r.is_active), key=lambda r: r.id)
    pairs: list[Pair] = []

    if len(active) >= 2:
        dists = pdist(np.stack([r.position for r in active]))
        rows, cols = np.triu_indices(len(active), k=1)
        close = dists < comms_radius
        pairs = [(active[i].id, active[j].id) for i, j in zip(rows[close], cols[close])]

    if network is not None:
        network.sync({r.id: r for r in active}, pairs)

    return pairs

def external_round(network: InterrobotNetwork, channel: CommsChannel) -> int:
    """
    One external iteration. Phase 1: interrobot rows between two online robots send
    fresh messages; every other row delivers a vacuous message. Phase 2: every variable
    of the graph updates. Returns the number of messages delivered.
    """
    graph, batch = network.graph, network.batch

    if len(batch):
        owners = graph.owner[batch.var_idx]
        ids, inverse = np.unique(owners, return_inverse=True)
        up = np.array([channel.is_online(int(rid)) for rid in ids], dtype=bool)
        batch.enabled = np.all(up[inverse.reshape(owners.shape)], axis=1)

    sent = batch.arity * factor_update(graph, batch, damping=network.damping)
    network.messages += sent

    variable_update(graph)
    return sent
