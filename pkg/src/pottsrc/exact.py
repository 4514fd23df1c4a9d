"""Brute-force ground truth on small instances.

Exact Potts and random-cluster partition functions (the latter on the
ghost-augmented graph, with the component count including the ghost's
component), the rank-2 spin sum, finite-tree boundary-condition measures,
and an exact stochastic-domination check for sprinkled FK measures.
Budgets are enforced, not guessed: q^n <= 1e8 spin configurations,
2^26 bond masks, 26 rank-2 subset bits.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np
from numba import njit

from . import bp, rcm
from .errors import BudgetExceeded, ConditionUnsatisfied, DomainError, InvalidState
from .graphs import MultiGraph, augment
from .params import ModelParams

_SPIN_BUDGET = 10**8
_MASK_BUDGET = 26
_CHUNK = 1 << 18


@dataclass
class ExactSummary:
    z_potts: Optional[float] = None
    z_rc: Optional[float] = None
    z_rank2: Optional[float] = None
    z_rank2_window: Optional[float] = None
    z_free_partial: Optional[float] = None
    z_wired_partial: Optional[float] = None
    pair_agree: Optional[Dict[Tuple[int, int], float]] = None
    connect: Optional[Dict[Tuple[int, int], float]] = None


# ---------------------------------------------------------------------------
# Potts enumeration (vectorized over spin configurations)
# ---------------------------------------------------------------------------

def _original_edges(g: MultiGraph) -> np.ndarray:
    if g.ghost:
        edges = [(u, v) for u, v in g.edges if u != g.n and v != g.n]
    else:
        edges = list(g.edges)
    return np.asarray(edges, dtype=np.int64).reshape(len(edges), 2)


def exact_potts(g: MultiGraph, params: ModelParams,
                window_eps: Optional[float] = None) -> ExactSummary:
    """Sum the Potts weight e^{beta*#mono(sigma) + B*#{v: sigma_v=1}} over
    all q^n spin configurations of the original vertices."""
    q = params.qi
    n = g.n
    if q ** n > _SPIN_BUDGET:
        raise BudgetExceeded(f"q^n = {q}^{n} exceeds the spin enumeration budget")
    edges = _original_edges(g)
    windows = None
    if window_eps is not None:
        nf, nw = bp.bp_fixed_points(params)
        windows = (bp.root_marginal(params, nf).probs,
                   bp.root_marginal(params, nw).probs)

    total = q ** n
    powers = q ** np.arange(n, dtype=np.int64)
    z = 0.0
    z_free = 0.0
    z_wired = 0.0
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    agree_num = np.zeros(len(pairs))
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % q  # colors 0..q-1; color 1 is 0
        mono = np.zeros(len(idx))
        for u, v in edges:
            mono += digits[:, u] == digits[:, v]
        k1 = (digits == 0).sum(axis=1)
        wgt = np.exp(params.beta * mono + params.B * k1)
        z += wgt.sum()
        for j, (u, v) in enumerate(pairs):
            agree_num[j] += wgt[digits[:, u] == digits[:, v]].sum()
        if windows is not None:
            counts = np.stack([(digits == c).sum(axis=1) for c in range(q)], axis=1)
            profile = counts / n
            in_f = (np.abs(profile - windows[0][None, :]) < window_eps).all(axis=1)
            in_w = (np.abs(profile - windows[1][None, :]) < window_eps).all(axis=1)
            z_free += wgt[in_f].sum()
            z_wired += wgt[in_w].sum()
    out = ExactSummary(z_potts=float(z))
    out.pair_agree = {pr: float(agree_num[j] / z) for j, pr in enumerate(pairs)}
    if windows is not None:
        out.z_free_partial = float(z_free)
        out.z_wired_partial = float(z_wired)
    return out


# ---------------------------------------------------------------------------
# Random-cluster enumeration (bitmask over bond configurations)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _rc_mask_kernel(nv, edges, logw, q, pairs):
    m = edges.shape[0]
    z = 0.0
    conn = np.zeros(pairs.shape[0])
    parent = np.empty(nv, dtype=np.int64)
    logq = np.log(q)
    for mask in range(1 << m):
        for i in range(nv):
            parent[i] = i
        ncomp = nv
        lw = 0.0
        for e in range(m):
            if mask & (1 << e):
                lw += logw[e]
                a = edges[e, 0]
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                b = edges[e, 1]
                while parent[b] != b:
                    parent[b] = parent[parent[b]]
                    b = parent[b]
                if a != b:
                    parent[a] = b
                    ncomp -= 1
        wgt = np.exp(lw + (ncomp - 1) * logq)
        z += wgt
        for k in range(pairs.shape[0]):
            a = pairs[k, 0]
            while parent[a] != a:
                a = parent[a]
            b = pairs[k, 1]
            while parent[b] != b:
                b = parent[b]
            if a == b:
                conn[k] += wgt
    return z, conn


def _edge_log_weights(g_star: MultiGraph, params: ModelParams) -> np.ndarray:
    logw = np.empty(g_star.m)
    with np.errstate(divide="ignore"):
        lw = np.log(params.w) if params.w > 0 else -np.inf
        lwg = np.log(params.w_ghost) if params.w_ghost > 0 else -np.inf
    for k, (u, v) in enumerate(g_star.edges):
        logw[k] = lwg if (u == g_star.n or v == g_star.n) else lw
    return logw


def exact_rc(g_star: MultiGraph, params: ModelParams,
             pairs: Optional[list] = None) -> ExactSummary:
    """Exact Z^RC = sum_eta prod_e w_e^{eta_e} q^{|C(eta)|-1} on the augmented
    graph, components counted over all of V* (ghost included); also the
    connection probabilities phi[u <-> v].  Valid for real q > 2."""
    if not g_star.ghost:
        raise InvalidState("exact_rc expects a ghost-augmented graph")
    if g_star.m > _MASK_BUDGET:
        raise BudgetExceeded(f"|E*| = {g_star.m} exceeds the {_MASK_BUDGET}-bit budget")
    nv = g_star.n_total
    if pairs is None:
        pairs = [(u, v) for u in range(nv) for v in range(u + 1, nv)]
    parr = np.asarray(pairs, dtype=np.int64).reshape(len(pairs), 2)
    z, conn = _rc_mask_kernel(nv, g_star.edge_array(), _edge_log_weights(g_star, params),
                              float(params.q), parr)
    out = ExactSummary(z_rc=float(z))
    out.connect = {(int(u), int(v)): float(c / z) for (u, v), c in zip(pairs, conn)}
    return out


# ---------------------------------------------------------------------------
# Rank-2 spin sums
# ---------------------------------------------------------------------------

def rank2(g: MultiGraph, params: ModelParams, eps: Optional[float] = None
          ) -> Tuple[float, Optional[float]]:
    """Z-tilde = sum_S e^{B|S|} (1+w)^{|E(S)|} (q-1)^{n-|S|} (1+w/(q-1))^{|E(S^c)|}.

    The window variant keeps only S with |S|/n outside the eps-neighborhoods
    of the two candidate magnetizations s_free, s_wired."""
    if g.ghost:
        raise InvalidState("rank2 expects an unaugmented graph")
    n = g.n
    if n > _MASK_BUDGET:
        raise BudgetExceeded(f"n = {n} exceeds the {_MASK_BUDGET}-bit subset budget")
    edges = _original_edges(g)
    q, w, B = params.q, params.w, params.B
    log_in = np.log1p(w)
    log_out = np.log1p(w / (q - 1.0))
    logq1 = np.log(q - 1.0)

    s_pair = None
    if eps is not None:
        fp = rcm.rcm_bp_fixed_points(params)
        s_pair = (fp.s_free, fp.s_wired)

    z = 0.0
    z_win = 0.0
    for start in range(0, 1 << n, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, 1 << n), dtype=np.int64)
        bits = ((masks[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1)
        size = bits.sum(axis=1)
        e_in = np.zeros(len(masks), dtype=np.int64)
        e_out = np.zeros(len(masks), dtype=np.int64)
        for u, v in edges:
            bu, bv = bits[:, u], bits[:, v]
            e_in += bu & bv
            e_out += (1 - bu) & (1 - bv)
        logs = B * size + log_in * e_in + logq1 * (n - size) + log_out * e_out
        wgt = np.exp(logs)
        z += wgt.sum()
        if s_pair is not None:
            frac = size / n
            outside = ((np.abs(frac - s_pair[0]) >= eps)
                       & (np.abs(frac - s_pair[1]) >= eps))
            z_win += wgt[outside].sum()
    return float(z), (float(z_win) if eps is not None else None)


# ---------------------------------------------------------------------------
# Finite trees with boundary conditions
# ---------------------------------------------------------------------------

@dataclass
class TreeMeasure:
    depth: int
    boundary: Union[str, Tuple[Tuple[int, ...], ...]]
    root_marginal: bp.ColorLaw
    psi_r: float


def _tree_message_level(params: ModelParams, child: np.ndarray, n_children: int,
                        with_ghost_edge: bool = True) -> np.ndarray:
    """Combine n_children copies of `child` (shape (q,2): color x ghost-bit)
    below one vertex, including the vertex's own ghost edge."""
    q = params.qi
    w, wb = params.w, params.w_ghost
    child_sum = child.sum()
    out = np.empty((q, 2))
    for c in range(q):
        t0 = child_sum + w * child[c, 0]       # closed, or open to a bit-0 child
        t1 = w * child[c, 1]                   # open to a bit-1 child
        own0 = 1.0
        own1 = wb if c == 0 else 0.0
        if with_ghost_edge:
            zero = (t0 ** n_children) * own0
            tot = ((t0 + t1) ** n_children) * (own0 + own1)
        else:
            zero = t0 ** n_children
            tot = (t0 + t1) ** n_children
        out[c, 0] = zero
        out[c, 1] = tot - zero
    return out


def _leaf_message(params: ModelParams, boundary: str) -> np.ndarray:
    q = params.qi
    msg = np.zeros((q, 2))
    if boundary == "free":
        msg[:, 0] = 1.0
        msg[0, 1] = params.w_ghost
    else:  # wired: leaf identified with the ghost
        msg[0, 1] = 1.0
    return msg


def _tree_vertices(d: int, r: int):
    """BFS layout of the depth-r rooted tree: root 0, then level by level.
    Returns (n_vertices, edge list, leaves)."""
    edges = []
    level = [0]
    nxt = 1
    for depth in range(1, r + 1):
        fanout = d if depth == 1 else d - 1
        new_level = []
        for parent in level:
            for _ in range(fanout):
                edges.append((parent, nxt))
                new_level.append(nxt)
                nxt += 1
        level = new_level
    return nxt, edges, level


def tree_exact(d: int, r: int, params: ModelParams,
               boundary: Union[str, list, tuple]) -> TreeMeasure:
    """Root marginal and root-ghost connection probability psi_r on the
    depth-r d-regular tree under free / wired / explicit-partition leaf
    boundary conditions.

    Free and wired boundaries run a per-level dynamic program over the
    (color, connected-to-ghost) pair; an explicit partition of the leaves
    is handled by contracting each block and enumerating the contracted
    multigraph exactly.
    """
    if r < 1:
        raise DomainError("need depth r >= 1")
    n_leaves = d * (d - 1) ** (r - 1)
    if isinstance(boundary, str):
        if boundary not in ("free", "wired"):
            raise DomainError(f"unknown boundary {boundary!r}")
        if n_leaves > 10**5:
            raise BudgetExceeded(f"{n_leaves} leaves exceed the recursion budget")
        msg = _leaf_message(params, boundary)
        for _ in range(r - 1):
            msg = _tree_message_level(params, msg, d - 1)
            msg /= msg.sum()  # harmless overall scale; psi and marginals are ratios
        root = _tree_message_level(params, msg, d)
        z = root.sum()
        psi = root[:, 1].sum() / z
        marg = root.sum(axis=1) / z
        return TreeMeasure(depth=r, boundary=boundary,
                           root_marginal=bp.ColorLaw(marg), psi_r=float(psi))

    # Explicit partition of the leaf set (blocks of leaf indices 0..n_leaves-1).
    blocks = tuple(tuple(sorted(int(x) for x in blk)) for blk in boundary)
    flat = [x for blk in blocks for x in blk]
    if sorted(flat) != list(range(n_leaves)):
        raise DomainError("boundary must partition the leaves 0..n_leaves-1")
    if n_leaves > 6:
        raise BudgetExceeded("explicit partitions supported for at most 6 leaves")
    nv, tree_edges, leaves = _tree_vertices(d, r)
    ghost = nv
    all_edges = list(tree_edges) + [(v, ghost) for v in range(nv)]
    # Contract each block to its smallest member.
    label = list(range(nv + 1))
    for blk in blocks:
        keep = leaves[blk[0]]
        for j in blk[1:]:
            label[leaves[j]] = keep
    used = sorted(set(label))
    compact = {old: new for new, old in enumerate(used)}
    relabeled = [(compact[label[u]], compact[label[v]]) for u, v in all_edges]
    ghost_c = compact[label[ghost]]
    n_orig = len(used) - 1
    if len(relabeled) > _MASK_BUDGET:
        raise BudgetExceeded("contracted tree exceeds the mask budget")
    with np.errstate(divide="ignore"):
        lw = np.log(params.w) if params.w > 0 else -np.inf
        lwg = np.log(params.w_ghost) if params.w_ghost > 0 else -np.inf
    logw = np.array([lwg if ghost_c in (u, v) else lw for u, v in relabeled])
    parr = np.array([[compact[0], ghost_c]], dtype=np.int64)
    earr = np.asarray(relabeled, dtype=np.int64)
    z, conn = _rc_mask_kernel(n_orig + 1, earr, logw, float(params.q), parr)
    phi = float(conn[0] / z)
    q = params.qi
    p1 = (q - 1.0) / q * phi + 1.0 / q
    marg = np.full(q, (1.0 - p1) / (q - 1.0))
    marg[0] = p1
    return TreeMeasure(depth=r, boundary=blocks,
                       root_marginal=bp.ColorLaw(marg), psi_r=phi)


# ---------------------------------------------------------------------------
# Sprinkled stochastic domination
# ---------------------------------------------------------------------------

@njit(cache=True)
def _fk_mask_stats(nv, edges):
    """Per-mask component count, max component size, and pair connectivity
    (pairconn[mask, k] = 1 when pair k is connected), for all 2^m bond masks."""
    m = edges.shape[0]
    npair = nv * (nv - 1) // 2
    ncomp = np.empty(1 << m, dtype=np.int8)
    maxcomp = np.empty(1 << m, dtype=np.int8)
    pairconn = np.zeros((1 << m, npair), dtype=np.uint8)
    parent = np.empty(nv, dtype=np.int64)
    size = np.empty(nv, dtype=np.int64)
    for mask in range(1 << m):
        for i in range(nv):
            parent[i] = i
            size[i] = 1
        nc = nv
        for e in range(m):
            if mask & (1 << e):
                a = edges[e, 0]
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                b = edges[e, 1]
                while parent[b] != b:
                    parent[b] = parent[parent[b]]
                    b = parent[b]
                if a != b:
                    if size[a] < size[b]:
                        a, b = b, a
                    parent[b] = a
                    size[a] += size[b]
                    nc -= 1
        ncomp[mask] = nc
        best = 1
        for i in range(nv):
            if parent[i] == i and size[i] > best:
                best = size[i]
        maxcomp[mask] = best
        k = 0
        for u in range(nv):
            a = u
            while parent[a] != a:
                a = parent[a]
            for v in range(u + 1, nv):
                b = v
                while parent[b] != b:
                    b = parent[b]
                if a == b:
                    pairconn[mask, k] = 1
                k += 1
    return ncomp, maxcomp, pairconn


def _fk_weights(m: int, ncomp: np.ndarray, w: float, q: float) -> np.ndarray:
    masks = np.arange(1 << m, dtype=np.uint64)
    pop = np.zeros(1 << m, dtype=np.int64)
    for b in range(m):
        pop += ((masks >> np.uint64(b)) & np.uint64(1)).astype(np.int64)
    with np.errstate(divide="ignore"):
        logw = np.log(w) if w > 0 else -np.inf
    raw = pop * logw + ncomp.astype(np.float64) * np.log(q)
    out = np.exp(raw)
    return out / out.sum()


def _sprinkle_distribution(prob: np.ndarray, m: int, xi: float) -> np.ndarray:
    """Distribution of eta union zeta, eta ~ prob, zeta iid Ber(xi) per edge.

    One exact convolution per edge: a closed edge opens with probability xi,
    an open edge stays open.
    """
    masks = np.arange(1 << m, dtype=np.uint64)
    a = prob.astype(np.float64).copy()
    for b in range(m):
        hi = (masks & np.uint64(1 << b)) != 0
        a[hi] += xi * a[~hi]
        a[~hi] *= 1.0 - xi
    return a


def sprinkle_domination_check(g: MultiGraph, q: float, w1: float, w2: float,
                              xi: float) -> dict:
    """Exact check that the FK measure at w1 stochastically dominates the
    xi-sprinkled FK measure at w2 on the increasing events {edge open},
    {pair connected}, {largest component >= t}.

    Requires the sufficient condition xi/(1-xi) < (p1-p2)/q with
    p_i = w_i/(1+w_i); otherwise the check is skipped via
    ConditionUnsatisfied rather than reported as a failure.
    """
    if g.ghost:
        raise InvalidState("sprinkle check runs on the unaugmented graph")
    m = g.m
    if m > 16:
        raise BudgetExceeded(f"|E| = {m} exceeds the 16-edge budget")
    if not (0 <= xi < 1):
        raise DomainError("need 0 <= xi < 1")
    p1 = w1 / (1.0 + w1)
    p2 = w2 / (1.0 + w2)
    if not (xi / (1.0 - xi) < (p1 - p2) / q):
        raise ConditionUnsatisfied(
            f"xi/(1-xi) = {xi/(1-xi):.6g} not below (p1-p2)/q = {(p1-p2)/q:.6g}")
    nv = g.n
    ncomp, maxcomp, pairconn = _fk_mask_stats(nv, g.edge_array())
    prob1 = _fk_weights(m, ncomp, w1, q)
    prob2 = _fk_weights(m, ncomp, w2, q)
    sprinkled = _sprinkle_distribution(prob2, m, xi) if xi > 0 else prob2

    masks = np.arange(1 << m, dtype=np.uint64)
    report = {"condition": True, "events": {}, "max_violation": -np.inf}

    def record(name, e1, e2):
        gap = float(e2 - e1)  # positive = violation of domination
        report["events"][name] = {"dominant": float(e1), "sprinkled": float(e2)}
        report["max_violation"] = max(report["max_violation"], gap)

    for e in range(m):
        ind = ((masks >> np.uint64(e)) & np.uint64(1)).astype(np.float64)
        record(f"edge_{e}_open", prob1 @ ind, sprinkled @ ind)
    k = 0
    for u in range(nv):
        for v in range(u + 1, nv):
            ind = pairconn[:, k].astype(np.float64)
            record(f"connected_{u}_{v}", prob1 @ ind, sprinkled @ ind)
            k += 1
    for t in range(2, nv + 1):
        ind = (maxcomp >= t).astype(np.float64)
        record(f"giant_ge_{t}", prob1 @ ind, sprinkled @ ind)
    return report
