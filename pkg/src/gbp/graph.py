"""
Stacked factor graph and the synchronous GBP engine.

Every variable lives in one row of the graph arrays:
- lin (V, D)               linearization points (the current means)
- belief_eta, belief_lam   (V, D), (V, D, D): product of all incoming messages

Factors of the same kind and model are grouped in a FactorBatch, one row per factor.
A batch keeps the last message each row sent to each of its variables
(msg_eta (n, A, D), msg_lam (n, A, D, D)), so the message a variable sends back to a
factor is its belief minus that factor's own message.

Rows and variables carry an integer group (robot id, or a link id for interrobot
rows). A group's rows are contiguous and keep their order when others are removed.
"""
from __future__ import annotations
from collections import Counter
from typing import NamedTuple, Protocol

import numpy as np

from src.config import GBP_CONFIG, DEBUG_CONFIG
from src.schemas import FactorKind
from src.gbp.gaussian import InfoGaussian, damp, marginalize, solve_stacked, spd_mask
from src.utils.diagnostics import build_debug_logger

MAX_CONDITION = float(GBP_CONFIG["max_condition"])

_dbg_singular = build_debug_logger(
    cfg=DEBUG_CONFIG,
    domain_path="gbp.graph",
    key="print_singular"
)

class Linearization(NamedTuple):
    h: np.ndarray                       # (n, m)
    jac: np.ndarray                     # (n, m, A * D)
    guard: np.ndarray | None = None     # (n,) rows that send vacuous messages this round


class MeasurementModel(Protocol):
    def linearize(self, x: np.ndarray, data: dict[str, np.ndarray]) -> Linearization:
        """
        x: (n, A * D) stacked states of each row's variables. data: the rows' entries
        of FactorBatch.data.
        """
        ...


def _span(groups: np.ndarray, group: int) -> slice:
    hits = np.flatnonzero(groups == group)
    if hits.size == 0:
        return slice(0, 0)
    return slice(int(hits[0]), int(hits[-1]) + 1)


class FactorBatch:
    def __init__(
        self,
        name: str,
        kind: FactorKind,
        model: MeasurementModel,
        *,
        arity: int,
        dim: int
    ):
        if arity not in (1, 2):
            raise ValueError(f"Batch {name}: arity must be 1 or 2, got {arity}")

        self.name = name
        self.kind = kind
        self.model = model
        self.arity = int(arity)
        self.dim = int(dim)

        self.var_idx = np.zeros((0, self.arity), dtype=int)
        self.groups = np.zeros(0, dtype=int)
        self.precision = np.zeros(0)
        self.enabled = np.zeros(0, dtype=bool)
        self.data: dict[str, np.ndarray] = {}
        self.msg_eta = np.zeros((0, self.arity, self.dim))
        self.msg_lam = np.zeros((0, self.arity, self.dim, self.dim))
        self.diagnostics: Counter = Counter()
        self._unique: list[bool] | None = None

    def __len__(self) -> int:
        return int(self.groups.size)

    def rows_of(self, group: int) -> slice:
        return _span(self.groups, group)

    def append(
        self,
        groups: int | np.ndarray,
        var_idx: np.ndarray,
        *,
        sigma: float | np.ndarray,
        data: dict[str, np.ndarray] | None=None
    ) -> slice:
        var_idx = np.asarray(var_idx, dtype=int).reshape(-1, self.arity)
        k = var_idx.shape[0]
        data = dict(data or {})

        sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (k,))
        with np.errstate(divide="ignore", over="ignore"):
            precision = 1.0 / sigma**2
        if not (np.all(sigma > 0.0) and np.all(np.isfinite(precision))):
            raise ValueError(f"Batch {self.name}: sigma must be > 0 with finite precision, got {sigma.tolist()}")

        if not len(self):
            self.data = {}
        elif set(data) != set(self.data):
            raise ValueError(f"Batch {self.name}: row data keys {sorted(data)} != {sorted(self.data)}")

        start = len(self)
        self.var_idx = np.concatenate([self.var_idx, var_idx])
        self.groups = np.concatenate([self.groups, np.broadcast_to(np.asarray(groups, dtype=int), (k,))])
        self.precision = np.concatenate([self.precision, precision])
        self.enabled = np.concatenate([self.enabled, np.ones(k, dtype=bool)])
        self.msg_eta = np.concatenate([self.msg_eta, np.zeros((k, self.arity, self.dim))])
        self.msg_lam = np.concatenate([self.msg_lam, np.zeros((k, self.arity, self.dim, self.dim))])

        for key, value in data.items():
            value = np.asarray(value)
            if value.shape[0] != k:
                raise ValueError(f"Batch {self.name}: data[{key!r}] has {value.shape[0]} rows, expected {k}")
            old = self.data.get(key)
            self.data[key] = value.copy() if old is None else np.concatenate([old, value])

        self._unique = None
        return slice(start, start + k)

    def keep(self, mask: np.ndarray) -> None:
        """Drop every row where mask is False."""
        mask = np.asarray(mask, dtype=bool)
        self.var_idx = self.var_idx[mask]
        self.groups = self.groups[mask]
        self.precision = self.precision[mask]
        self.enabled = self.enabled[mask]
        self.msg_eta = self.msg_eta[mask]
        self.msg_lam = self.msg_lam[mask]
        self.data = {key: value[mask] for key, value in self.data.items()}
        self._unique = None

    def remove_groups(self, groups) -> None:
        self.keep(~np.isin(self.groups, np.asarray(list(groups), dtype=int)))

    def unique_slots(self) -> list[bool]:
        """Per slot: no variable appears twice, so fancy-index += is exact."""
        if self._unique is None:
            self._unique = [
                np.unique(self.var_idx[:, s]).size == len(self)
                for s in range(self.arity)
            ]
        return self._unique

    def __repr__(self) -> str:
        return f"FactorBatch(name={self.name!r}, kind={self.kind.value}, rows={len(self)}, arity={self.arity})"


class FactorGraph:
    """
    Variables and factor batches of one or more robots. A robot's variables are
    ordered by timestep (its first row is the current state).
    """
    def __init__(
        self,
        *,
        dim: int=4,
        damping: float=float(GBP_CONFIG["damping"]),
        max_condition: float=MAX_CONDITION
    ):
        if not (0.0 <= damping <= float(GBP_CONFIG["max_damping"])):
            raise ValueError(f"damping must be in [0, {GBP_CONFIG['max_damping']}], got {damping}")

        self.dim = int(dim)
        self.damping = float(damping)
        self.max_condition = float(max_condition)

        self.lin = np.zeros((0, self.dim))
        self.belief_eta = np.zeros((0, self.dim))
        self.belief_lam = np.zeros((0, self.dim, self.dim))
        self.owner = np.zeros(0, dtype=int)
        self.timestep_offset = np.zeros(0)
        self.batches: dict[str, FactorBatch] = {}

    @property
    def num_variables(self) -> int:
        return int(self.owner.size)

    def span(self, owner: int) -> slice:
        return _span(self.owner, owner)

    def add_variables(
        self,
        owner: int,
        lin: np.ndarray,
        *, timestep_offsets: np.ndarray | None=None
    ) -> slice:
        lin = np.asarray(lin, dtype=float).reshape(-1, self.dim)
        k = lin.shape[0]

        if np.any(self.owner == owner):
            raise ValueError(f"Owner {owner} already has variables in this graph")

        offsets = np.zeros(k) if timestep_offsets is None else np.asarray(timestep_offsets, dtype=float)
        if offsets.shape != (k,):
            raise ValueError(f"timestep_offsets must have shape ({k},), got {offsets.shape}")

        start = self.num_variables
        self.lin = np.concatenate([self.lin, lin])
        self.belief_eta = np.concatenate([self.belief_eta, np.zeros((k, self.dim))])
        self.belief_lam = np.concatenate([self.belief_lam, np.zeros((k, self.dim, self.dim))])
        self.owner = np.concatenate([self.owner, np.full(k, owner, dtype=int)])
        self.timestep_offset = np.concatenate([self.timestep_offset, offsets])
        return slice(start, start + k)

    def add_batch(
        self,
        name: str,
        kind: FactorKind,
        model: MeasurementModel,
        *, arity: int
    ) -> FactorBatch:
        if name in self.batches:
            raise ValueError(f"Duplicate batch name: {name}")
        batch = FactorBatch(name, kind, model, arity=arity, dim=self.dim)
        self.batches[name] = batch
        return batch

    def ensure_batch(
        self,
        name: str,
        kind: FactorKind,
        model: MeasurementModel,
        *, arity: int
    ) -> FactorBatch:
        """The existing batch called `name` (its model is kept), else a new one."""
        batch = self.batches.get(name)
        if batch is None:
            return self.add_batch(name, kind, model, arity=arity)
        if batch.kind != kind or batch.arity != arity:
            raise ValueError(f"Batch {name} exists as {batch.kind.value}/{batch.arity}, requested {kind.value}/{arity}")
        return batch

    def batches_of_kind(self, kind: FactorKind) -> list[FactorBatch]:
        return [b for b in self.batches.values() if b.kind == kind]

    def count(self, kind: FactorKind, group: int | None=None) -> int:
        total = 0
        for batch in self.batches_of_kind(kind):
            total += len(batch) if group is None else int(np.count_nonzero(batch.groups == group))
        return total

    def remove_owner(self, owner: int) -> None:
        """
        Remove the owner's variables and every factor row touching them; the remaining
        indices are compacted.
        """
        keep = self.owner != owner
        if np.all(keep):
            return

        remap = np.cumsum(keep) - 1
        for batch in self.batches.values():
            if len(batch):
                batch.keep(np.all(keep[batch.var_idx], axis=1))
                batch.var_idx = remap[batch.var_idx]

        self.lin = self.lin[keep]
        self.belief_eta = self.belief_eta[keep]
        self.belief_lam = self.belief_lam[keep]
        self.owner = self.owner[keep]
        self.timestep_offset = self.timestep_offset[keep]

    def belief(self, i: int) -> InfoGaussian:
        return InfoGaussian(self.belief_eta[i], self.belief_lam[i])

    def diagnostics(self) -> Counter:
        total: Counter = Counter()
        for batch in self.batches.values():
            total.update(batch.diagnostics)
        return total

    def check_chain(self, owner: int) -> None:
        """
        Horizon chain invariants for one owner: K-1 dynamics factors linking consecutive
        variables, pose anchors on the first and last variable.
        """
        span = self.span(owner)
        k = span.stop - span.start

        dyn = [b.var_idx[b.groups == owner] for b in self.batches_of_kind(FactorKind.DYNAMICS)]
        dyn = np.concatenate(dyn) if dyn else np.zeros((0, 2), dtype=int)
        if len(dyn) != k - 1:
            raise ValueError(f"Expected {k - 1} dynamics factors, found {len(dyn)}")
        if np.any(dyn[:, 1] != dyn[:, 0] + 1) or np.any(dyn < span.start) or np.any(dyn >= span.stop):
            raise ValueError(f"Dynamics factors of {owner} do not link consecutive variables")

        anchored = {
            int(v) for b in self.batches_of_kind(FactorKind.POSE)
            for v in b.var_idx[b.groups == owner, 0]
        }
        if span.start not in anchored or span.stop - 1 not in anchored:
            raise ValueError("First and last variables must carry pose anchors")

    def __repr__(self) -> str:
        return f"FactorGraph(variables={self.num_variables}, batches={list(self.batches)})"


def factor_information(
    model: MeasurementModel,
    x0: np.ndarray,
    data: dict[str, np.ndarray],
    precision: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Linearized factor potentials at x0, row by row:

        lam_f = prec J^T J,  eta_f = prec J^T (J x0 - h(x0) + z)

    Returns (eta_f (n, A*D), lam_f (n, A*D, A*D), guard (n,), active (n,)). Guarded rows
    and rows with an all-zero Jacobian carry zero potentials.
    """
    n, width = x0.shape
    eta_f = np.zeros((n, width))
    lam_f = np.zeros((n, width, width))

    lin = model.linearize(x0, data)
    h = np.asarray(lin.h, dtype=float).reshape(n, -1)
    jac = np.asarray(lin.jac, dtype=float).reshape(n, h.shape[1], width)
    guard = np.zeros(n, dtype=bool) if lin.guard is None else np.asarray(lin.guard, dtype=bool)

    active = ~guard & np.any(jac != 0.0, axis=(1, 2))
    if not np.any(active):
        return eta_f, lam_f, guard, active

    j = jac[active]
    x = x0[active]
    resid = (j @ x[:, :, None])[:, :, 0] - h[active]
    z = data.get("z")
    if z is not None:
        resid = resid + np.asarray(z, dtype=float).reshape(n, -1)[active]

    jt = np.swapaxes(j, 1, 2)
    prec = precision[active]
    lam_f[active] = prec[:, None, None] * (jt @ j)
    eta_f[active] = prec[:, None] * (jt @ resid[:, :, None])[:, :, 0]
    return eta_f, lam_f, guard, active

def linearized_messages(
    model: MeasurementModel,
    x0: np.ndarray,
    data: dict[str, np.ndarray],
    precision: np.ndarray,
    cav_eta: np.ndarray | None=None,
    cav_lam: np.ndarray | None=None,
    *,
    dim: int,
    max_condition: float=MAX_CONDITION
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """
    Factor-to-variable messages for n rows of arity A (1 or 2).

    A unary factor sends its potential. A pairwise factor sends each variable the
    Schur complement of (potential x cavity of the other variable); rows whose
    eliminated block is singular send a vacuous message and are counted.

    Returns (eta (n, A, D), lam (n, A, D, D), guard (n,), singular count).
    """
    n = x0.shape[0]
    arity = x0.shape[1] // dim
    eta = np.zeros((n, arity, dim))
    lam = np.zeros((n, arity, dim, dim))

    eta_f, lam_f, guard, active = factor_information(model, x0, data, precision)
    rows = np.flatnonzero(active)
    if rows.size == 0:
        return eta, lam, guard, 0

    if arity == 1:
        eta[rows, 0] = eta_f[rows]
        lam[rows, 0] = lam_f[rows]
        return eta, lam, guard, 0

    ef, lf = eta_f[rows], lam_f[rows]
    singular = 0

    for t in range(arity):
        o = 1 - t
        st = slice(t * dim, (t + 1) * dim)
        so = slice(o * dim, (o + 1) * dim)

        lam_oo = lf[:, so, so] + cav_lam[rows, o]
        eta_o = ef[:, so] + cav_eta[rows, o]

        ok = spd_mask(lam_oo, max_condition=max_condition)
        singular += int(np.count_nonzero(~ok))
        if not np.any(ok):
            continue

        m_eta, m_lam = marginalize(ef[ok, st], eta_o[ok], lf[ok, st, st], lf[ok, st, so], lam_oo[ok])
        eta[rows[ok], t] = m_eta
        lam[rows[ok], t] = m_lam

    return eta, lam, guard, singular

def factor_update(
    graph: FactorGraph,
    batch: FactorBatch,
    *,
    rows: slice | None=None,
    damping: float | None=None
) -> int:
    """
    Recompute the messages of `rows` (default all) of `batch` at the current
    linearization points and store them. Disabled rows send vacuous messages; enabled
    rows are damped against their previous message. Returns the number of enabled rows.
    """
    beta = graph.damping if damping is None else float(damping)
    sel = slice(None) if rows is None else rows

    var_idx = batch.var_idx[sel]
    n = var_idx.shape[0]
    if n == 0:
        return 0

    enabled = batch.enabled[sel]
    on = np.flatnonzero(enabled)
    eta = np.zeros((n, batch.arity, batch.dim))
    lam = np.zeros((n, batch.arity, batch.dim, batch.dim))

    if on.size:
        idx = var_idx[on]
        old_eta = batch.msg_eta[sel][on]
        old_lam = batch.msg_lam[sel][on]

        cav_eta = cav_lam = None
        if batch.arity > 1:
            cav_eta = graph.belief_eta[idx] - old_eta
            cav_lam = graph.belief_lam[idx] - old_lam

        new_eta, new_lam, guard, singular = linearized_messages(
            batch.model,
            graph.lin[idx].reshape(on.size, -1),
            {key: value[sel][on] for key, value in batch.data.items()},
            batch.precision[sel][on],
            cav_eta,
            cav_lam,
            dim=batch.dim,
            max_condition=graph.max_condition
        )

        batch.diagnostics["guard"] += int(np.count_nonzero(guard))
        if singular:
            batch.diagnostics["singular"] += singular
            _dbg_singular(f"{batch.name}: {singular} singular marginal(s)")

        eta[on] = damp(new_eta, old_eta, beta)
        lam[on] = damp(new_lam, old_lam, beta)

    batch.msg_eta[sel] = eta
    batch.msg_lam[sel] = lam
    return int(on.size)

def variable_update(graph: FactorGraph, which: np.ndarray | None=None) -> None:
    """
    belief = sum of every incoming message (batches in insertion order). The
    linearization points of `which` (default all) move to the belief means; beliefs
    that are singular or ill-conditioned keep their previous point.
    """
    eta = np.zeros_like(graph.belief_eta)
    lam = np.zeros_like(graph.belief_lam)

    for batch in graph.batches.values():
        if not len(batch):
            continue
        for slot, unique in enumerate(batch.unique_slots()):
            idx = batch.var_idx[:, slot]
            if unique:
                eta[idx] += batch.msg_eta[:, slot]
                lam[idx] += batch.msg_lam[:, slot]
            else:
                np.add.at(eta, idx, batch.msg_eta[:, slot])
                np.add.at(lam, idx, batch.msg_lam[:, slot])

    graph.belief_eta = eta
    graph.belief_lam = lam

    idx = np.arange(graph.num_variables) if which is None else np.unique(np.asarray(which, dtype=int))
    if idx.size == 0:
        return

    ok = spd_mask(lam[idx], max_condition=graph.max_condition)
    sel = idx[ok]
    if sel.size:
        graph.lin[sel] = solve_stacked(lam[sel], eta[sel])

def iterate_internal(
    graph: FactorGraph,
    n: int,
    *, damping: float | None=None
) -> None:
    """
    n synchronous rounds: every non-interrobot batch, then every variable.
    """
    for _ in range(int(n)):
        for batch in graph.batches.values():
            if batch.kind != FactorKind.INTERROBOT:
                factor_update(graph, batch, damping=damping)
        variable_update(graph)


def joint_information(graph: FactorGraph) -> InfoGaussian:
    """
    Dense joint over all variables with every enabled factor linearized at the current
    linearization points. Used as the exact-inference oracle.
    """
    d = graph.dim
    total = graph.num_variables * d
    eta = np.zeros(total)
    lam = np.zeros((total, total))

    for batch in graph.batches.values():
        on = np.flatnonzero(batch.enabled)
        if on.size == 0:
            continue

        idx = batch.var_idx[on]
        eta_f, lam_f, _, active = factor_information(
            batch.model,
            graph.lin[idx].reshape(on.size, -1),
            {key: value[on] for key, value in batch.data.items()},
            batch.precision[on]
        )

        for r in np.flatnonzero(active):
            dense = (idx[r][:, None] * d + np.arange(d)).ravel()
            eta[dense] += eta_f[r]
            lam[np.ix_(dense, dense)] += lam_f[r]

    return InfoGaussian(eta, lam)
