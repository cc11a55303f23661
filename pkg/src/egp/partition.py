"""Ego group partition: ego sampling, ego randomization and alter assignment rules."""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from egp import kernels
from egp.clustering import label_propagation
from egp.graph import second_neighborhood_ego_graph
from egp.rng import stream

ALGORITHMS = ("linear", "convex", "snc")


class DesignError(ValueError):
    """Raised when a design step cannot produce a valid partition."""


@dataclass(frozen=True)
class DesignMeta:
    algorithm: str = "pending"
    q: float = None
    theta: float = None
    seed: int = None

    @property
    def tag(self):
        if self.algorithm == "convex":
            return f"convex({self.theta:g})"
        return self.algorithm


@dataclass(frozen=True, eq=False)
class Partition:
    """Ego flags and a treatment vector over all nodes.

    Until alters are assigned (``complete`` False) every alter carries
    ``treatment = False`` as a placeholder.
    """

    ego_flags: np.ndarray
    treatment: np.ndarray
    complete: bool = False
    meta: DesignMeta = field(default_factory=DesignMeta)

    def __post_init__(self):
        self.ego_flags.setflags(write=False)
        self.treatment.setflags(write=False)

    @property
    def egos(self):
        return np.flatnonzero(self.ego_flags)

    @property
    def n1(self):
        return int(np.count_nonzero(self.ego_flags & self.treatment))

    @property
    def n0(self):
        return int(np.count_nonzero(self.ego_flags & ~self.treatment))

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return (
            self.complete == other.complete
            and self.meta == other.meta
            and np.array_equal(self.ego_flags, other.ego_flags)
            and np.array_equal(self.treatment, other.treatment)
        )

    @classmethod
    def from_egos(cls, n, egos, ego_treated, meta=None):
        """Partition with the given egos and arms; alters pending."""
        flags = np.zeros(n, dtype=bool)
        w = np.zeros(n, dtype=bool)
        egos = np.asarray(egos, dtype=np.int64)
        flags[egos] = True
        w[egos] = np.asarray(ego_treated, dtype=bool)
        return cls(flags, w, False, meta or DesignMeta())


@dataclass(frozen=True, eq=False)
class DeltaScores:
    """Per-node ego affinities; entries at egos are NaN.

    ``delta_tilde`` is +inf where an alter touches only treated egos and NaN
    where it touches no ego at all.
    """

    treated_affinity: np.ndarray
    control_affinity: np.ndarray
    delta: np.ndarray
    delta_tilde: np.ndarray


@dataclass(frozen=True, eq=False)
class ExposureSummary:
    ego_ids: np.ndarray
    treated: np.ndarray  # arm per ego, aligned with ego_ids
    sigma: np.ndarray
    mean_sigma_treated: float
    mean_sigma_control: float

    @property
    def r_statistic(self):
        return self.mean_sigma_treated - self.mean_sigma_control


def ego_count(n, q):
    # half-up rounding, never below 2
    return max(2, int(math.floor(q * n + 0.5)))


def select_egos(g, q, rng_seed):
    """Uniformly sample ``round(q n)`` egos among nodes with degree >= 1."""
    if not 0.0 < q < 1.0:
        raise DesignError(f"q must lie in (0, 1), got {q}")
    eligible = np.flatnonzero(g.degrees > 0)
    k = ego_count(g.n, q)
    if eligible.size < 2:
        raise DesignError("fewer than 2 nodes with degree >= 1")
    if k > eligible.size:
        raise DesignError(f"need {k} egos but only {eligible.size} nodes have degree >= 1")
    chosen = stream(rng_seed, "egos").choice(eligible, size=k, replace=False)
    flags = np.zeros(g.n, dtype=bool)
    flags[chosen] = True
    return flags


def randomize_egos(ego_flags, rng_seed, meta=None):
    """Complete randomization: ceil(n_e / 2) egos treated, the rest control."""
    egos = np.flatnonzero(ego_flags)
    if egos.size < 2:
        raise DesignError("at least 2 egos are required")
    perm = stream(rng_seed, "arms").permutation(egos.size)
    treated = np.zeros(egos.size, dtype=bool)
    treated[perm[: (egos.size + 1) // 2]] = True
    return Partition.from_egos(ego_flags.size, egos, treated, meta)


def _ego_weights(g, p):
    n1, n0 = p.n1, p.n0
    if n1 == 0 or n0 == 0:
        raise DesignError(f"degenerate ego randomization (n1={n1}, n0={n0})")
    deg = g.degrees.astype(np.float64)
    if np.any(deg[p.ego_flags] == 0):
        raise DesignError("an ego has degree 0")
    wt = np.zeros(g.n)
    wc = np.zeros(g.n)
    t = p.ego_flags & p.treatment
    c = p.ego_flags & ~p.treatment
    wt[t] = 1.0 / (n1 * deg[t])
    wc[c] = 1.0 / (n0 * deg[c])
    return wt, wc


def delta_scores(g, p):
    wt, wc = _ego_weights(g, p)
    alters = np.flatnonzero(~p.ego_flags)
    treated_aff = np.full(g.n, np.nan)
    control_aff = np.full(g.n, np.nan)
    treated_aff[alters] = kernels.neighbor_sums(g.indptr, g.indices, wt, alters)
    control_aff[alters] = kernels.neighbor_sums(g.indptr, g.indices, wc, alters)
    delta = treated_aff - control_aff
    with np.errstate(divide="ignore", invalid="ignore"):
        tilde = delta / control_aff
    tilde[(control_aff == 0) & (treated_aff > 0)] = np.inf
    tilde[(control_aff == 0) & (treated_aff == 0)] = np.nan
    return DeltaScores(treated_aff, control_aff, delta, tilde)


def compute_delta(g, p):
    """Treated-minus-control ego affinity of every alter (NaN at egos)."""
    return delta_scores(g, p).delta


def compute_delta_tilde(g, p):
    """Relative ego affinity (T - C) / C of every alter (NaN at egos)."""
    return delta_scores(g, p).delta_tilde


def _complete(p, alter_treated, meta):
    w = p.treatment.copy()
    alters = ~p.ego_flags
    w[alters] = alter_treated[alters]
    return Partition(p.ego_flags.copy(), w, True, meta)


def assign_alters_linear(g, p):
    """Treat alter j iff its affinity difference is strictly positive."""
    delta = compute_delta(g, p)
    return _complete(p, delta > 0, replace(p.meta, algorithm="linear", theta=0.0))


def assign_alters_convex(g, p, theta):
    """Treat alter j iff its relative affinity exceeds ``theta``."""
    if not theta >= 0:
        raise DesignError(f"theta must be >= 0, got {theta}")
    tilde = compute_delta_tilde(g, p)
    with np.errstate(invalid="ignore"):
        treat = tilde > theta  # NaN compares False -> control
    return _complete(p, treat, replace(p.meta, algorithm="convex", theta=float(theta)))


def randomize_clusters(clustering, rng_seed):
    """Shuffle clusters, then give each to whichever arm holds fewer egos so far."""
    sizes = clustering.sizes
    order = stream(rng_seed, "clusters").permutation(sizes.size)
    arm = np.zeros(sizes.size, dtype=bool)
    load_t = load_c = 0
    for c in order:
        if load_t <= load_c:
            arm[c] = True
            load_t += sizes[c]
        else:
            load_c += sizes[c]
    return arm[clustering.cluster_of]


def assign_alters_snc(g, ego_flags, rng_seed, clustering=None, max_iters=20, meta=None):
    """Cluster egos on the second-neighborhood graph, randomize clusters, then apply the linear rule."""
    sg = second_neighborhood_ego_graph(g, ego_flags)
    if sg.size < 2:
        raise DesignError("at least 2 egos are required")
    if clustering is None:
        cl = label_propagation(sg, rng_seed, max_iters=max_iters)
    else:
        cl = clustering(sg, rng_seed)
    treated = randomize_clusters(cl, rng_seed)
    p = Partition.from_egos(g.n, sg.ego_ids, treated, meta)
    out = assign_alters_linear(g, p)
    return Partition(out.ego_flags.copy(), out.treatment.copy(), True, replace(out.meta, algorithm="snc"))


def exposure_summary(g, p):
    """Treated-neighbor ratio of every ego, arm means and their difference."""
    egos = p.egos
    deg = g.degrees[egos].astype(np.float64)
    if np.any(deg == 0):
        raise DesignError("an ego has degree 0; its exposure is undefined")
    treated = p.treatment[egos]
    if treated.all() or not treated.any():
        raise DesignError("both arms need at least one ego")
    sigma = kernels.neighbor_sums(g.indptr, g.indices, p.treatment.astype(np.float64), egos) / deg
    return ExposureSummary(
        ego_ids=egos,
        treated=treated,
        sigma=sigma,
        mean_sigma_treated=float(sigma[treated].mean()),
        mean_sigma_control=float(sigma[~treated].mean()),
    )


def cross_arm_edges(sg, p):
    """Number of ego second-neighborhood edges whose endpoints sit in different arms."""
    e = sg.edges()
    arms = p.treatment[sg.ego_ids]
    return int(np.count_nonzero(arms[e[:, 0]] != arms[e[:, 1]]))


def build_partition(g, algorithm, q, seed, theta=0.0, max_iters=20):
    """Run the whole design: sample egos, randomize, assign alters."""
    if algorithm not in ALGORITHMS:
        raise DesignError(f"unknown algorithm {algorithm!r}")
    meta = DesignMeta(algorithm=algorithm, q=float(q), theta=float(theta), seed=int(seed))
    flags = select_egos(g, q, seed)
    if algorithm == "snc":
        return assign_alters_snc(g, flags, seed, max_iters=max_iters, meta=meta)
    p = randomize_egos(flags, seed, meta)
    if algorithm == "linear":
        return assign_alters_linear(g, p)
    return assign_alters_convex(g, p, theta)


@dataclass(frozen=True)
class OracleResult:
    treatment: np.ndarray
    max_value: float
    lambda1: float
    lambda2: float


def oracle_max_R(g, p, theta=0.0, limit=20):
    """Exhaustive maximizer of mean_t(sigma) - (1 + theta) mean_c(sigma) over alter assignments.

    Works on the dense adjacency matrix and never touches the affinity
    scores, so it can check the scoring rules. Only alters with an ego
    neighbor are enumerated; the rest cannot move any ego's exposure and stay
    in control. Also returns the ego-ego and ego-alter parts of the optimum.
    """
    n = g.n
    A = np.zeros((n, n))
    e = g.edges()
    A[e[:, 0], e[:, 1]] = 1.0
    A[e[:, 1], e[:, 0]] = 1.0
    E = p.ego_flags.astype(np.float64)
    Wego = (p.ego_flags & p.treatment).astype(np.float64)
    n1, n0 = p.n1, p.n0
    if n1 == 0 or n0 == 0:
        raise DesignError("both arms need at least one ego")
    d = A.sum(axis=1)
    egos = np.flatnonzero(p.ego_flags)
    relevant = np.flatnonzero((A[egos].sum(axis=0) > 0) & ~p.ego_flags)
    if relevant.size > limit:
        raise DesignError(f"{relevant.size} ego-adjacent alters exceed the enumeration limit {limit}")

    k = relevant.size
    combos = ((np.arange(1 << k)[:, None] >> np.arange(k)) & 1).astype(np.float64)
    W = np.tile(Wego, (combos.shape[0], 1))
    W[:, relevant] = combos
    sigma = (W @ A[egos].T) / d[egos]
    tr = p.treatment[egos]
    values = sigma[:, tr].sum(axis=1) / n1 - (1.0 + theta) * sigma[:, ~tr].sum(axis=1) / n0
    best = int(np.argmax(values))
    w_best = W[best]

    # split sigma into ego-neighbor and alter-neighbor contributions
    P = A / np.where(d > 0, d, 1.0)[:, None]
    coef_t = E * Wego / n1
    coef_c = (1.0 + theta) * E * (1.0 - Wego) / n0
    lam1 = coef_t @ P @ (E * w_best) - coef_c @ P @ (E * w_best)
    lam2 = coef_t @ P @ ((1 - E) * w_best) - coef_c @ P @ ((1 - E) * w_best)
    return OracleResult(w_best.astype(bool), float(values[best]), float(lam1), float(lam2))
