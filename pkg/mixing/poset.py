"""Partial orders on finite ground sets and on real vectors, plus up-set machinery."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Literal, Sequence

import networkx as nx
import numpy as np

from config import ENUM_MAX_STATES, FLOW_SCALE
from mixing.errors import CapacityError, DomainError

logger = logging.getLogger(__name__)

OrderTag = Literal["identity", "total_real", "product_real"]


@dataclass(frozen=True)
class OrderKind:
    """A named order on real scalars or vectors."""
    tag: OrderTag
    k: int = 1

    def __post_init__(self):
        if self.tag not in ("identity", "total_real", "product_real"):
            raise DomainError(f"Unknown order tag: {self.tag!r}")
        if self.k < 1:
            raise DomainError(f"Order dimension must be >= 1, got {self.k}")

    @classmethod
    def identity(cls, k: int = 1) -> OrderKind:
        return cls("identity", k)

    @classmethod
    def total_real(cls) -> OrderKind:
        return cls("total_real", 1)

    @classmethod
    def product_real(cls, k: int) -> OrderKind:
        return cls("product_real", k)


@dataclass(frozen=True, eq=False)
class FinitePoset:
    """Ground set `states` with relation matrix leq[i][j] = state_i ⪯ state_j.

    Immutable after construction; the relation is validated once (O(n³)).
    """
    states: tuple
    leq: np.ndarray = field(repr=False)

    def __post_init__(self):
        states = tuple(self.states)
        leq = np.array(self.leq, dtype=bool)
        n = len(states)
        if leq.shape != (n, n):
            raise DomainError(f"Relation must be {n}x{n}, got shape {leq.shape}")
        if len(set(states)) != n:
            raise DomainError("State labels must be distinct")
        if not leq.diagonal().all():
            i = int(np.flatnonzero(~leq.diagonal())[0])
            raise DomainError(f"Relation is not reflexive at state {states[i]!r}")
        both = leq & leq.T
        np.fill_diagonal(both, False)
        if both.any():
            i, j = np.argwhere(both)[0]
            raise DomainError(f"Relation is not antisymmetric: {states[i]!r} and {states[j]!r}")
        composed = (leq.astype(np.int64) @ leq.astype(np.int64)) > 0
        if (composed & ~leq).any():
            i, j = np.argwhere(composed & ~leq)[0]
            raise DomainError(f"Relation is not transitive: {states[i]!r} ⪯ ... ⪯ {states[j]!r} missing")
        leq.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "leq", leq)

    # ── constructors ─────────────────────────────────────────────────────

    @classmethod
    def chain(cls, labels: int | Sequence[Hashable]) -> FinitePoset:
        states = tuple(range(labels)) if isinstance(labels, int) else tuple(labels)
        n = len(states)
        return cls(states, np.triu(np.ones((n, n), dtype=bool)))

    @classmethod
    def antichain(cls, labels: int | Sequence[Hashable]) -> FinitePoset:
        """The identity order on a finite set."""
        states = tuple(range(labels)) if isinstance(labels, int) else tuple(labels)
        return cls(states, np.eye(len(states), dtype=bool))

    @classmethod
    def from_relation(cls, states: Sequence[Hashable], relation) -> FinitePoset:
        """Reflexive-transitive closure of `relation`, then validation."""
        rel = np.array(relation, dtype=bool) | np.eye(len(states), dtype=bool)
        while True:
            closed = rel | ((rel.astype(np.int64) @ rel.astype(np.int64)) > 0)
            if (closed == rel).all():
                break
            rel = closed
        return cls(tuple(states), rel)

    @classmethod
    def product(cls, p: FinitePoset, q: FinitePoset) -> FinitePoset:
        """Componentwise order on p.states × q.states (row-major pairs)."""
        states = tuple((a, b) for a in p.states for b in q.states)
        return cls(states, np.kron(p.leq, q.leq).astype(bool))

    # ── accessors ────────────────────────────────────────────────────────

    @property
    def n(self) -> int:
        return len(self.states)

    @cached_property
    def _positions(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    def index(self, label) -> int:
        try:
            return self._positions[label]
        except (KeyError, TypeError):
            raise DomainError(f"Unknown state label: {label!r}") from None

    @cached_property
    def graph(self) -> np.ndarray:
        """Index pairs (i, j) with state_i ⪯ state_j, shape (m, 2)."""
        return np.argwhere(self.leq)

    def mask(self, subset: Iterable) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        for s in subset:
            m[self.index(s)] = True
        return m

    @cached_property
    def up_set_masks(self) -> np.ndarray:
        """All up-sets as a boolean matrix, one row per up-set."""
        if self.n > ENUM_MAX_STATES:
            raise CapacityError(
                f"Up-set enumeration is limited to {ENUM_MAX_STATES} states (got {self.n}); "
                "use the min-cut path (best_up_set) instead"
            )
        return _enumerate_masks(self.leq)

    def __repr__(self) -> str:
        return f"FinitePoset(n={self.n}, relations={int(self.leq.sum())})"


def _enumerate_masks(leq: np.ndarray) -> np.ndarray:
    n = leq.shape[0]
    # strict up-sets shrink along the order, so fewest upper bounds means "processed first"
    order = np.argsort(leq.sum(axis=1), kind="stable")
    strict_up = []
    for i in range(n):
        bits = 0
        for j in np.flatnonzero(leq[i]):
            if j != i:
                bits |= 1 << int(j)
        strict_up.append(bits)

    found: list[int] = []

    def visit(pos: int, current: int):
        if pos == n:
            found.append(current)
            return
        i = int(order[pos])
        visit(pos + 1, current)
        if current & strict_up[i] == strict_up[i]:
            visit(pos + 1, current | (1 << i))

    visit(0, 0)
    codes = np.array(found, dtype=np.int64)
    masks = ((codes[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)
    masks.setflags(write=False)
    return masks


# ── order predicates ─────────────────────────────────────────────────────────

def leq(order: OrderKind | FinitePoset, x, y) -> bool:
    """Truth of x ⪯ y under the given order."""
    if isinstance(order, FinitePoset):
        return bool(order.leq[order.index(x), order.index(y)])
    try:
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        ya = np.atleast_1d(np.asarray(y, dtype=float))
    except (TypeError, ValueError):
        raise DomainError(f"{order.tag} order needs real points, got {x!r} and {y!r}") from None
    if xa.shape != (order.k,) or ya.shape != (order.k,):
        raise DomainError(f"{order.tag} order expects points of dimension {order.k}, got {xa.shape} and {ya.shape}")
    return bool(compare(order, xa[None, :], ya[None, :])[0])


def compare(order: OrderKind, xs, ys) -> np.ndarray:
    """Vectorized x ⪯ y for real points; rows are points when k > 1."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if order.tag == "total_real":
        return xs <= ys
    if order.tag == "product_real":
        if xs.ndim == 1 and order.k == 1:
            return xs <= ys
        return np.all(xs <= ys, axis=-1)
    if xs.ndim == 1 and order.k == 1:
        return xs == ys
    return np.all(xs == ys, axis=-1)


# ── up-sets ──────────────────────────────────────────────────────────────────

def is_up_set(poset: FinitePoset, S: Iterable) -> bool:
    """True iff i ∈ S and state_i ⪯ state_j imply j ∈ S."""
    m = poset.mask(S)
    return not poset.leq[m][:, ~m].any()


def enumerate_up_sets(poset: FinitePoset) -> list[frozenset]:
    """Every up-set of the poset, ∅ and the full set included."""
    return [frozenset(s for s, keep in zip(poset.states, row) if keep) for row in poset.up_set_masks]


def best_up_set(poset: FinitePoset, w) -> tuple[float, np.ndarray]:
    """Maximise Σ_{i∈U} w_i over up-sets U; returns (value, mask of U).

    The empty set is an up-set, so the value is never negative. Small
    posets are enumerated; larger ones are solved as a max-weight closure.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (poset.n,):
        raise DomainError(f"Weight vector must have length {poset.n}, got {w.shape}")
    if poset.n <= ENUM_MAX_STATES:
        masks = poset.up_set_masks
        values = masks.astype(float) @ w
        k = int(np.argmax(values))
        return max(float(values[k]), 0.0), masks[k].copy()
    return _closure_by_min_cut(poset, w)


def _closure_by_min_cut(poset: FinitePoset, w: np.ndarray) -> tuple[float, np.ndarray]:
    scaled = np.rint(w * FLOW_SCALE).astype(np.int64)
    G = nx.DiGraph()
    G.add_node("s")
    G.add_node("t")
    for i, wi in enumerate(scaled.tolist()):
        if wi > 0:
            G.add_edge("s", i, capacity=wi)
        elif wi < 0:
            G.add_edge(i, "t", capacity=-wi)
        else:
            G.add_node(i)
    for i, j in poset.graph.tolist():
        if i != j:
            G.add_edge(i, j)  # no capacity attribute: infinite
    cut, (source_side, _) = nx.minimum_cut(G, "s", "t")
    positive = int(scaled[scaled > 0].sum())
    mask = np.zeros(poset.n, dtype=bool)
    for v in source_side:
        if v != "s":
            mask[v] = True
    logger.debug(f"max-weight closure on {poset.n} states: value={(positive - cut) / FLOW_SCALE:.3e}")
    # report the unscaled weight of the chosen closure
    return max(float(mask.astype(float) @ w), 0.0), mask
