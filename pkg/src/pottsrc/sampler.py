"""Edwards-Sokal coupled Monte Carlo.

The external field is a percolation layer: the Potts model with field B on G
is sampled on the augmented graph G* whose ghost vertex carries color 1, so
a Swendsen-Wang sweep is just the two ES conditionals back to back —
bonds given spins (open monochromatic edges with their p_e), then spins
given bonds (ghost component keeps color 1, every other cluster gets an
independent uniform color).

All randomness flows through numpy Generators; replica streams are spawned
from the master seed with SeedSequence, and every sweep draws a fixed
number of variates, so traces are byte-stable for a given seed regardless
of the execution schedule across replicas.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from numba import njit

from . import bp, rcm
from .errors import ConfigError, DomainError, InvalidState
from .graphs import MultiGraph
from .params import ModelParams


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------

@dataclass
class SpinConfig:
    colors: np.ndarray  # values 1..q, one per original vertex; ghost is color 1
    q: int

    def __post_init__(self):
        c = np.asarray(self.colors)
        if c.size and (c.min() < 1 or c.max() > self.q):
            raise DomainError("colors must lie in 1..q")
        self.colors = c.astype(np.int64)


@njit(cache=True)
def _uf_labels(nv, edges, open_mask):
    """Root label per vertex for the graph restricted to open edges."""
    parent = np.arange(nv)
    for e in range(edges.shape[0]):
        if open_mask[e]:
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
    labels = np.empty(nv, dtype=np.int64)
    for i in range(nv):
        r = i
        while parent[r] != r:
            r = parent[r]
        # compress the walked path for the next queries
        j = i
        while parent[j] != r:
            nj = parent[j]
            parent[j] = r
            j = nj
        labels[i] = r
    return labels


@dataclass
class BondConfig:
    g: MultiGraph
    open: np.ndarray  # bool per edge of g
    _labels: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.open = np.asarray(self.open, dtype=bool)
        if self.open.shape != (self.g.m,):
            raise DomainError("open mask must have one bit per edge")

    @property
    def components(self) -> np.ndarray:
        if self._labels is None:
            self._labels = _uf_labels(self.g.n_total, self.g.edge_array(), self.open)
        return self._labels

    @property
    def giant_fraction(self) -> float:
        """|C*(eta)|/n when a ghost exists; largest component fraction otherwise."""
        labels = self.components
        n = self.g.n
        if self.g.ghost:
            return float((labels[:n] == labels[n]).sum()) / n
        return float(np.bincount(labels, minlength=self.g.n_total).max()) / n

    @property
    def cluster_sizes(self) -> np.ndarray:
        """Sizes of the non-giant clusters (original vertices only), sorted."""
        labels = self.components
        n = self.g.n
        counts = np.bincount(labels[:n], minlength=self.g.n_total)
        if self.g.ghost:
            counts[labels[n]] = 0
        else:
            counts[np.argmax(counts)] = 0
        sizes = counts[counts > 0]
        sizes.sort()
        return sizes


# ---------------------------------------------------------------------------
# ES conditionals
# ---------------------------------------------------------------------------

def _edge_probs(params: ModelParams, g_star: MultiGraph) -> np.ndarray:
    ea = g_star.edge_array()
    ghost_edge = (ea[:, 0] == g_star.n) | (ea[:, 1] == g_star.n)
    return np.where(ghost_edge, params.p_ghost, params.p_edge)


def es_bonds_given_spins(params: ModelParams, g_star: MultiGraph,
                         sigma: SpinConfig, rng: np.random.Generator) -> BondConfig:
    """Open every monochromatic edge of E* independently with its p_e."""
    if not g_star.ghost:
        raise InvalidState("es_bonds_given_spins expects an augmented graph")
    params.qi  # reject non-integer q
    ext = np.append(sigma.colors, 1)  # ghost color
    ea = g_star.edge_array()
    mono = ext[ea[:, 0]] == ext[ea[:, 1]]
    u = rng.random(g_star.m)
    return BondConfig(g=g_star, open=(u < _edge_probs(params, g_star)) & mono)


def es_spins_given_bonds(q: int, g_star: MultiGraph, eta: BondConfig,
                         rng: np.random.Generator) -> SpinConfig:
    """Ghost component takes color 1; every other cluster an iid uniform color."""
    labels = eta.components
    candidate = rng.integers(1, q + 1, size=g_star.n_total)
    candidate[labels[g_star.n]] = 1
    return SpinConfig(colors=candidate[labels[:g_star.n]], q=q)


def sw_sweep(params: ModelParams, g_star: MultiGraph, sigma: SpinConfig,
             rng: np.random.Generator) -> SpinConfig:
    """One Swendsen-Wang sweep: bonds given spins, then spins given bonds."""
    eta = es_bonds_given_spins(params, g_star, sigma, rng)
    return es_spins_given_bonds(params.qi, g_star, eta, rng)


def fk_ising_sweep(w_ising: float, g: MultiGraph, eta: BondConfig,
                   rng: np.random.Generator) -> BondConfig:
    """One SW-style update for the zero-field FK-Ising measure on g."""
    if g.ghost:
        raise InvalidState("fk_ising_sweep runs on the unaugmented graph")
    if w_ising <= 0:
        raise DomainError("need w_ising > 0")
    labels = eta.components
    signs = rng.integers(0, 2, size=g.n_total)  # per-root candidate +-
    colors = signs[labels]
    ea = g.edge_array()
    mono = colors[ea[:, 0]] == colors[ea[:, 1]]
    u = rng.random(g.m)
    return BondConfig(g=g, open=(u < w_ising / (1.0 + w_ising)) & mono)


def bernoulli_sprinkle(eta: BondConfig, xi: float,
                       rng: np.random.Generator) -> BondConfig:
    """Open each closed edge with probability xi; never close an edge."""
    if not (0 < xi < 1):
        raise DomainError("need 0 < xi < 1")
    u = rng.random(eta.g.m)
    return BondConfig(g=eta.g, open=eta.open | (u < xi))


def glauber_sweep(params: ModelParams, g_star: MultiGraph, sigma: SpinConfig,
                  rng: np.random.Generator) -> SpinConfig:
    """Single-site heat-bath sweep; slow cross-check for the SW kernel."""
    q = params.qi
    colors = sigma.colors.copy()
    indptr_nbrs: Dict[int, List[int]] = {v: [] for v in range(g_star.n)}
    for u, v in g_star.edges:
        if u != g_star.n and v != g_star.n:
            indptr_nbrs[u].append(v)
            indptr_nbrs[v].append(u)
    for v in range(g_star.n):
        logits = np.zeros(q)
        for u in indptr_nbrs[v]:
            logits[colors[u] - 1] += params.beta
        logits[0] += params.B
        p = np.exp(logits - logits.max())
        p /= p.sum()
        colors[v] = 1 + rng.choice(q, p=p)
    return SpinConfig(colors=colors, q=q)


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObservableRefs:
    """Fixed-point reference values the window events compare against."""
    nu_free: np.ndarray
    nu_wired: np.ndarray
    psi_free: float
    psi_wired: float
    eps_default: float


def observable_refs(params: ModelParams) -> ObservableRefs:
    nf, nw = bp.bp_fixed_points(params)
    rf = bp.root_marginal(params, nf).probs
    rw = bp.root_marginal(params, nw).probs
    fp = rcm.rcm_bp_fixed_points(params)
    eps0 = 0.5 * float(np.min(np.abs(rf - rw)))
    return ObservableRefs(nu_free=rf, nu_wired=rw, psi_free=fp.psi_free,
                          psi_wired=fp.psi_wired, eps_default=eps0)


def observables(params: ModelParams, eps: Optional[float] = None,
                sigma: Optional[SpinConfig] = None,
                eta: Optional[BondConfig] = None,
                refs: Optional[ObservableRefs] = None) -> dict:
    """Color profile, cluster geometry, and window memberships of one state."""
    if sigma is None and eta is None:
        raise DomainError("need a spin or bond configuration")
    if refs is None:
        refs = observable_refs(params)
    if eps is None:
        eps = refs.eps_default
    rec: dict = {}
    if sigma is not None:
        q = sigma.q
        n = len(sigma.colors)
        counts = np.bincount(sigma.colors - 1, minlength=q)
        L = counts / n
        rec["L"] = L.tolist()
        rec["in_V_free"] = bool((np.abs(L - refs.nu_free) < eps).all())
        rec["in_V_wired"] = bool((np.abs(L - refs.nu_wired) < eps).all())
        if q == 2:
            rec["magnetization"] = float(L[0] - L[1])
    if eta is not None:
        gf = eta.giant_fraction
        sizes = eta.cluster_sizes
        rec["giant_fraction"] = gf
        rec["max_nongiant"] = int(sizes[-1]) if len(sizes) else 0
        rec["in_E_free"] = bool(abs(gf - refs.psi_free) <= eps)
        rec["in_E_wired"] = bool(abs(gf - refs.psi_wired) <= eps)
    return rec


# ---------------------------------------------------------------------------
# Chains
# ---------------------------------------------------------------------------

@dataclass
class ChainConfig:
    graph: MultiGraph                    # augmented for potts_sw, plain for fk_ising
    params: Optional[ModelParams] = None  # required for potts_sw
    sweeps: int = 0
    burn_in: Optional[int] = None        # default: 10% of sweeps
    thin: int = 1
    replicas: int = 1
    seed: int = 0
    mode: str = "potts_sw"
    eps_window: Optional[float] = None
    w_ising: Optional[float] = None      # fk_ising edge weight (default params.w)

    def __post_init__(self):
        if self.burn_in is None:
            self.burn_in = self.sweeps // 10
        if self.mode not in ("potts_sw", "fk_ising"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.sweeps <= self.burn_in or self.thin < 1 or self.replicas < 1:
            raise ConfigError("need sweeps > burn_in, thin >= 1, replicas >= 1")
        if self.mode == "potts_sw":
            if self.params is None:
                raise ConfigError("potts_sw needs model params")
            if not self.graph.ghost:
                raise ConfigError("potts_sw needs an augmented graph")
        if self.mode == "fk_ising":
            if self.graph.ghost:
                raise ConfigError("fk_ising needs an unaugmented graph")
            if self.w_ising is None:
                if self.params is None:
                    raise ConfigError("fk_ising needs w_ising or model params")
                self.w_ising = self.params.w
            if self.w_ising <= 0:
                raise ConfigError("need w_ising > 0")


@dataclass
class ChainTrace:
    records: List[dict]
    seed: int
    sweeps: int
    burn_in: int
    thin: int
    replicas: int
    mode: str


def _run_replica_potts(cfg: ChainConfig, rep: int, rng: np.random.Generator,
                       refs: ObservableRefs) -> List[dict]:
    g_star = cfg.graph
    q = cfg.params.qi
    n = g_star.n
    nv = g_star.n_total
    m = g_star.m
    ea = g_star.edge_array()
    probs = _edge_probs(cfg.params, g_star)
    if rep % 2 == 0:       # half the replicas start disordered, half ordered
        colors = rng.integers(1, q + 1, size=n)
    else:
        colors = np.ones(n, dtype=np.int64)
    ext = np.ones(nv, dtype=np.int64)  # ghost color stays 1
    out = []
    for sweep in range(cfg.sweeps):
        ext[:n] = colors
        mono = ext[ea[:, 0]] == ext[ea[:, 1]]
        open_mask = (rng.random(m) < probs) & mono
        labels = _uf_labels(nv, ea, open_mask)
        candidate = rng.integers(1, q + 1, size=nv)
        candidate[labels[n]] = 1
        colors = candidate[labels[:n]]
        if sweep >= cfg.burn_in and (sweep - cfg.burn_in) % cfg.thin == 0:
            eta = BondConfig(g=g_star, open=open_mask, _labels=labels)
            rec = observables(cfg.params, cfg.eps_window,
                              sigma=SpinConfig(colors=colors, q=q), eta=eta,
                              refs=refs)
            rec["replica"] = rep
            rec["sweep"] = sweep
            out.append(rec)
    return out


def _run_replica_fk(cfg: ChainConfig, rep: int, rng: np.random.Generator,
                    w_ising: float) -> List[dict]:
    g = cfg.graph
    nv = g.n_total
    ea = g.edge_array()
    open_mask = np.zeros(g.m, dtype=bool) if rep % 2 == 0 else np.ones(g.m, dtype=bool)
    labels = _uf_labels(nv, ea, open_mask)
    p_open = w_ising / (1.0 + w_ising)
    out = []
    for sweep in range(cfg.sweeps):
        signs = rng.integers(0, 2, size=nv)
        colors = signs[labels]
        mono = colors[ea[:, 0]] == colors[ea[:, 1]]
        open_mask = (rng.random(g.m) < p_open) & mono
        labels = _uf_labels(nv, ea, open_mask)
        if sweep >= cfg.burn_in and (sweep - cfg.burn_in) % cfg.thin == 0:
            eta = BondConfig(g=g, open=open_mask, _labels=labels)
            sizes = eta.cluster_sizes
            rec = {
                "replica": rep, "sweep": sweep,
                "giant_fraction": eta.giant_fraction,
                "max_nongiant": int(sizes[-1]) if len(sizes) else 0,
                "magnetization": float(2.0 * colors[:g.n].mean() - 1.0),
            }
            out.append(rec)
    return out


def run_chain(cfg: ChainConfig) -> ChainTrace:
    """Run R independent replicas; deterministic given cfg.seed.

    Potts replicas alternate disordered (uniform random colors) and ordered
    (all-1) initial states; FK replicas alternate all-closed and all-open.
    Replica r uses the r-th SeedSequence child of the master seed, so traces
    do not depend on how replicas are scheduled.
    """
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.replicas)
    records: List[dict] = []
    if cfg.mode == "potts_sw":
        refs = observable_refs(cfg.params)
        for rep, ss in enumerate(streams):
            records.extend(_run_replica_potts(cfg, rep, np.random.default_rng(ss), refs))
    else:
        for rep, ss in enumerate(streams):
            records.extend(_run_replica_fk(cfg, rep, np.random.default_rng(ss),
                                           cfg.w_ising))
    return ChainTrace(records=records, seed=cfg.seed, sweeps=cfg.sweeps,
                      burn_in=cfg.burn_in, thin=cfg.thin,
                      replicas=cfg.replicas, mode=cfg.mode)


# ---------------------------------------------------------------------------
# Compiled small-graph chain (used by oracle-equivalence tests)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _sw_agree_kernel(nv, edges, probs, q, sweeps, burn_in, u_bonds, u_cols, colors0):
    n = nv - 1  # ghost is the last vertex
    m = edges.shape[0]
    colors = colors0.copy()
    parent = np.empty(nv, dtype=np.int64)
    agree = np.zeros((n, n))
    kept = 0
    for s in range(sweeps):
        for i in range(nv):
            parent[i] = i
        for e in range(m):
            if colors[edges[e, 0]] == colors[edges[e, 1]] and u_bonds[s, e] < probs[e]:
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
        rg = n
        while parent[rg] != rg:
            rg = parent[rg]
        for v in range(nv):
            r = v
            while parent[r] != r:
                r = parent[r]
            if r == rg:
                colors[v] = 1
            else:
                colors[v] = 1 + int(u_cols[s, r] * q)
        if s >= burn_in:
            kept += 1
            for a in range(n):
                for b in range(a + 1, n):
                    if colors[a] == colors[b]:
                        agree[a, b] += 1.0
    return agree, kept


def sw_pair_agreement(params: ModelParams, g_star: MultiGraph, sweeps: int,
                      burn_in: int, seed: int) -> Dict[Tuple[int, int], float]:
    """Long-run SW pair-agreement frequencies P[sigma_u = sigma_v] on a small
    augmented graph, via a compiled sweep loop fed with pregenerated variates."""
    if not g_star.ghost:
        raise InvalidState("sw_pair_agreement expects an augmented graph")
    q = params.qi
    nv = g_star.n_total
    rng = np.random.default_rng(seed)
    u_bonds = rng.random((sweeps, g_star.m))
    u_cols = rng.random((sweeps, nv))
    colors0 = np.append(rng.integers(1, q + 1, size=g_star.n), 1).astype(np.int64)
    agree, kept = _sw_agree_kernel(nv, g_star.edge_array(),
                                   _edge_probs(params, g_star), q, sweeps,
                                   burn_in, u_bonds, u_cols, colors0)
    return {(u, v): float(agree[u, v] / kept)
            for u in range(g_star.n) for v in range(u + 1, g_star.n)}
