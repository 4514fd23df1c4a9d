"""Random regular multigraphs, ghost augmentation, and graph diagnostics.

Graphs are small immutable records: `n` original vertices, an explicit edge
list (loops and parallel edges allowed), and an optional ghost vertex with
index `n` adjacent to every original vertex.  The pairing (configuration)
model drives all random generation so that every draw is reproducible from
its integer seed.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np
from numba import njit
from scipy import sparse

from .errors import (BudgetExceeded, DomainError, InvalidArity, InvalidState,
                     NotConnected, PlacementFailure)


@dataclass(frozen=True)
class MultiGraph:
    n: int                      # original vertices, 0..n-1 (ghost, if any, is n)
    edges: Tuple[Tuple[int, int], ...]
    half_edge_pairing: Optional[Tuple[int, ...]] = None
    ghost: bool = False

    @property
    def n_total(self) -> int:
        return self.n + 1 if self.ghost else self.n

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_total, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    @cached_property
    def _edge_array(self) -> np.ndarray:
        arr = np.asarray(self.edges, dtype=np.int64).reshape(self.m, 2)
        arr.setflags(write=False)
        return arr

    def is_simple(self) -> bool:
        seen = set()
        for u, v in self.edges:
            if u == v:
                return False
            key = (u, v) if u < v else (v, u)
            if key in seen:
                return False
            seen.add(key)
        return True

    def edge_array(self) -> np.ndarray:
        """(m, 2) int array of endpoints; cached and read-only."""
        return self._edge_array


def from_edges(n: int, edges, ghost: bool = False) -> MultiGraph:
    es = tuple((int(u), int(v)) for u, v in edges)
    nv = n + 1 if ghost else n
    for u, v in es:
        if not (0 <= u < nv and 0 <= v < nv):
            raise DomainError(f"edge ({u},{v}) out of range for n={n}")
    return MultiGraph(n=n, edges=es, ghost=ghost)


def adjacency_csr(g: MultiGraph, dedupe: bool = False,
                  drop_loops: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """(indptr, indices) arrays over all vertices (ghost included if present)."""
    nv = g.n_total
    pairs = []
    for u, v in g.edges:
        if drop_loops and u == v:
            continue
        pairs.append((u, v))
        pairs.append((v, u))
    if dedupe:
        pairs = sorted(set(pairs))
    else:
        pairs.sort()
    indptr = np.zeros(nv + 1, dtype=np.int64)
    indices = np.empty(len(pairs), dtype=np.int64)
    for k, (u, v) in enumerate(pairs):
        indptr[u + 1] += 1
        indices[k] = v
    np.cumsum(indptr, out=indptr)
    return indptr, indices


def is_connected(g: MultiGraph) -> bool:
    nv = g.n_total
    if nv == 0:
        return True
    indptr, indices = adjacency_csr(g, dedupe=True, drop_loops=True)
    seen = np.zeros(nv, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for v in indices[indptr[u]:indptr[u + 1]]:
            if not seen[v]:
                seen[v] = True
                stack.append(int(v))
    return bool(seen.all())


# ---------------------------------------------------------------------------
# Pairing (configuration) model
# ---------------------------------------------------------------------------

def sample_pairing_model(n: int, d: int, seed: int) -> MultiGraph:
    """Uniform pairing of n*d half-edges; half-edge i belongs to vertex i//d."""
    if n < 1 or (n * d) % 2 != 0:
        raise InvalidArity(f"n*d must be even and n >= 1 (got n={n}, d={d})")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n * d)
    edges = tuple((int(perm[2 * t] // d), int(perm[2 * t + 1] // d))
                  for t in range(n * d // 2))
    return MultiGraph(n=n, edges=edges, half_edge_pairing=tuple(int(x) for x in perm))


def sample_with_girth(n: int, d: int, seed: int, girth_min: int,
                      max_attempts: int = 10**4) -> MultiGraph:
    """Resample the pairing model until the girth is at least girth_min.

    Loops and parallel edges count as girth 1 and 2.  Attempt seeds are
    derived deterministically from the master seed, so the accepted draw
    is reproducible.
    """
    seeds = np.random.SeedSequence(seed).generate_state(max_attempts, dtype=np.uint64)
    for s in seeds:
        g = sample_pairing_model(n, d, int(s))
        if girth_min <= 2:
            if g.is_simple() or girth_min <= girth_lower(g):
                return g
            continue
        if not g.is_simple():
            continue
        stats = cycle_counts(g, min(max(girth_min - 1, 3), 12))
        if stats.girth >= girth_min:
            return g
    raise PlacementFailure(f"no girth >= {girth_min} sample in {max_attempts} attempts")


def girth_lower(g: MultiGraph) -> int:
    """1 if any loop, else 2 if any parallel edge, else 3 (lower bound)."""
    seen = set()
    best = 3
    for u, v in g.edges:
        if u == v:
            return 1
        key = (u, v) if u < v else (v, u)
        if key in seen:
            best = 2
        seen.add(key)
    return best


# ---------------------------------------------------------------------------
# Cycle counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CycleStats:
    counts: Dict[int, int]
    girth: float  # int when a cycle exists within budget, math.inf otherwise


@njit(cache=True)
def _count_cycles_kernel(indptr, indices, K):
    n = indptr.shape[0] - 1
    counts = np.zeros(K + 1, dtype=np.int64)
    path = np.empty(K, dtype=np.int64)
    ptr = np.empty(K, dtype=np.int64)
    visited = np.zeros(n, dtype=np.bool_)
    for s in range(n):
        depth = 0
        path[0] = s
        ptr[0] = indptr[s]
        while depth >= 0:
            u = path[depth]
            if ptr[depth] >= indptr[u + 1]:
                if depth > 0:
                    visited[u] = False
                depth -= 1
                continue
            v = indices[ptr[depth]]
            ptr[depth] += 1
            if v == s:
                if depth >= 2:
                    counts[depth + 1] += 1
                continue
            if v < s or visited[v] or depth + 1 >= K:
                continue
            depth += 1
            path[depth] = v
            visited[v] = True
            ptr[depth] = indptr[v]
    for k in range(counts.shape[0]):
        counts[k] //= 2  # each cycle walked in both directions from its min vertex
    return counts


def cycle_counts(g: MultiGraph, K: int) -> CycleStats:
    """Exact simple k-cycle counts (vertex sets with cyclic adjacency), 3 <= k <= K."""
    if K > 12:
        raise BudgetExceeded(f"cycle budget K={K} exceeds 12")
    if K < 3:
        raise DomainError("need K >= 3")
    indptr, indices = adjacency_csr(g, dedupe=True, drop_loops=True)
    raw = _count_cycles_kernel(indptr, indices, K)
    counts = {k: int(raw[k]) for k in range(3, K + 1)}
    low = girth_lower(g)
    if low < 3:
        girth = float(low)
    else:
        girth = float("inf")
        for k in range(3, K + 1):
            if counts[k] > 0:
                girth = float(k)
                break
    return CycleStats(counts=counts, girth=girth)


# ---------------------------------------------------------------------------
# Ghost augmentation and serialization
# ---------------------------------------------------------------------------

def augment(g: MultiGraph) -> MultiGraph:
    """Append ghost vertex n, adjacent to every original vertex."""
    if g.ghost:
        raise InvalidState("graph already augmented")
    ghost_edges = tuple((v, g.n) for v in range(g.n))
    return MultiGraph(n=g.n, edges=g.edges + ghost_edges,
                      half_edge_pairing=g.half_edge_pairing, ghost=True)


def to_edge_list(g: MultiGraph) -> str:
    lines = [f"{g.n} {g.m}"]
    if g.ghost:
        lines.append("augmented=1")
    lines.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def from_edge_list(text: str) -> MultiGraph:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise DomainError("empty edge list")
    head = lines[0].split()
    if len(head) != 2:
        raise DomainError(f"bad header line: {lines[0]!r}")
    n, m = int(head[0]), int(head[1])
    body = lines[1:]
    ghost = False
    if body and body[0].startswith("augmented="):
        ghost = body[0] == "augmented=1"
        body = body[1:]
    if len(body) != m:
        raise DomainError(f"expected {m} edges, found {len(body)}")
    edges = []
    for ln in body:
        u, v = (int(x) for x in ln.split())
        edges.append((u, v))
    return from_edges(n, edges, ghost=ghost)


def save_edge_list(g: MultiGraph, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(to_edge_list(g))


def load_edge_list(path: str) -> MultiGraph:
    with open(path) as fh:
        return from_edge_list(fh.read())


# ---------------------------------------------------------------------------
# p-modified graphs
# ---------------------------------------------------------------------------

def _within_distance(indptr, indices, src: int, radius: int) -> set:
    """Vertices at graph distance < radius from src (src itself included)."""
    seen = {src}
    frontier = [src]
    for _ in range(radius - 1):
        nxt = []
        for u in frontier:
            for v in indices[indptr[u]:indptr[u + 1]]:
                v = int(v)
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return seen


def modify_graph(g: MultiGraph, p: int, d_star: int, seed: int,
                 min_separation: int, max_attempts: int = 10**4
                 ) -> Tuple[MultiGraph, MultiGraph]:
    """Delete m = p*d_star/2 well-separated edges; rewire their endpoints
    onto p new vertices of degree d_star.

    Edge i is drawn as (uniform vertex, uniform neighbor); a draw of all m
    edges is accepted only when endpoints of distinct selected edges are
    pairwise >= min_separation apart (the two endpoints of one selected
    edge are adjacent by construction and exempt).  g_hat is g minus the
    selected edges; g_tilde re-attaches every endpoint to exactly one new
    vertex, round-robin, so original vertices regain degree d and each new
    vertex has degree d_star.
    """
    if g.ghost:
        raise InvalidState("modify_graph expects an unaugmented graph")
    if p % 2 != 0 or p < 0:
        raise DomainError("p must be even and nonnegative")
    deg = g.degrees()
    d = int(deg[0]) if g.n else 0
    if not g.is_simple() or not (deg == d).all():
        raise DomainError("modify_graph expects a simple d-regular graph")
    if d_star not in (d - 1, d + 1):
        raise DomainError(f"d_star must be d-1 or d+1 (d={d})")
    if p == 0:
        return g, g
    m = p * d_star // 2
    rng = np.random.default_rng(seed)
    indptr, indices = adjacency_csr(g, dedupe=True, drop_loops=True)
    edge_index = {}
    for k, (u, v) in enumerate(g.edges):
        edge_index[(u, v)] = k
        edge_index[(v, u)] = k

    for _ in range(max_attempts):
        firsts = rng.integers(0, g.n, size=m)
        chosen = []
        for a in firsts:
            nbrs = indices[indptr[a]:indptr[a + 1]]
            b = int(nbrs[rng.integers(0, len(nbrs))])
            chosen.append((int(a), b))
        if min_separation < 1:
            balls = [set() for _ in chosen]
        else:
            balls = [_within_distance(indptr, indices, a, min_separation)
                     | _within_distance(indptr, indices, b, min_separation)
                     for a, b in chosen]
        ok = True
        for i in range(m):
            for j in range(i + 1, m):
                ai, bi = chosen[i]
                if ai in balls[j] or bi in balls[j]:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        removed = {edge_index[e] for e in chosen}
        kept = tuple(e for k, e in enumerate(g.edges) if k not in removed)
        g_hat = MultiGraph(n=g.n, edges=kept)
        endpoints = [e[0] for e in chosen] + [e[1] for e in chosen]
        new_edges = tuple((endpoints[j], g.n + (j % p)) for j in range(2 * m))
        g_tilde = MultiGraph(n=g.n + p, edges=kept + new_edges)
        return g_hat, g_tilde
    raise PlacementFailure(
        f"could not place {m} edges with separation {min_separation} "
        f"in {max_attempts} attempts")


# ---------------------------------------------------------------------------
# Spectral diagnostic
# ---------------------------------------------------------------------------

def second_eigenvalue(g: MultiGraph, tol: float = 1e-10) -> float:
    """Second-largest (algebraic) adjacency eigenvalue by deflated power iteration."""
    if g.ghost:
        raise InvalidState("second_eigenvalue expects an unaugmented graph")
    if not is_connected(g):
        raise NotConnected("graph is not connected")
    nv = g.n
    if nv < 2:
        raise DomainError("second eigenvalue needs at least 2 vertices")
    ea = g.edge_array()
    loops = ea[:, 0] == ea[:, 1]
    rows = np.concatenate([ea[~loops, 0], ea[~loops, 1], ea[loops, 0]])
    cols = np.concatenate([ea[~loops, 1], ea[~loops, 0], ea[loops, 1]])
    vals = np.concatenate([np.ones(2 * int((~loops).sum())), 2.0 * np.ones(int(loops.sum()))])
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(nv, nv))
    shift = float(g.degrees()[:nv].max()) + 1.0  # makes all shifted eigenvalues positive
    M = (A + shift * sparse.identity(nv, format="csr")).tocsr()
    rng = np.random.default_rng(0x5EC04D)

    def apply(u: np.ndarray, deflate: Optional[np.ndarray]) -> np.ndarray:
        w = M @ u
        if deflate is not None:
            w -= deflate * (deflate @ w)
        return w

    def power(deflate: Optional[np.ndarray]) -> Tuple[np.ndarray, float]:
        u = rng.standard_normal(nv)
        if deflate is not None:
            u -= deflate * (deflate @ u)
        u /= np.linalg.norm(u)
        for _ in range(500000):
            w = apply(u, deflate)
            nrm = np.linalg.norm(w)
            if nrm == 0.0:
                break
            u = w / nrm
            w = apply(u, deflate)
            lam = u @ w
            if np.linalg.norm(w - lam * u) <= tol:
                break
        return u, float(u @ apply(u, deflate))

    v1, _ = power(None)
    _, lam2_shifted = power(v1)
    return lam2_shifted - shift
