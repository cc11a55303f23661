"""Ego difference-in-means estimator, bias diagnostics and Monte Carlo bias studies."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from statistics import NormalDist

import numpy as np

from egp._accel import serial_kernels
from egp.outcomes import generate_outcomes, true_gate
from egp.partition import ALGORITHMS, DesignError, build_partition, exposure_summary
from egp.rng import replication_seed

Z95 = NormalDist().inv_cdf(0.975)


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class EstimateRecord:
    tau_hat: float
    n1: int
    n0: int
    se: float
    ci_low: float
    ci_high: float
    mean_sigma_t: float = float("nan")
    mean_sigma_c: float = float("nan")

    @property
    def r_statistic(self):
        return self.mean_sigma_t - self.mean_sigma_c


@dataclass(frozen=True)
class Design:
    algorithm: str = "linear"
    q: float = 0.025
    theta: float = 0.0
    max_iters: int = 20

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise DesignError(f"unknown algorithm {self.algorithm!r}")


@dataclass
class SimReport:
    model: dict
    design: dict
    reps: int
    master_seed: int
    true_tau: float
    mean_bias: float
    bias_sd: float
    mean_sigma_t: float
    mean_sigma_c: float
    per_rep: list = field(default_factory=list)

    def to_dict(self, per_rep=False):
        d = {
            "model": self.model,
            "design": self.design,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "replication_scheme": "ego selection and randomization redrawn every replication",
            "true_tau": self.true_tau,
            "mean_bias": self.mean_bias,
            "bias_sd": self.bias_sd,
            "mean_sigma_t": self.mean_sigma_t,
            "mean_sigma_c": self.mean_sigma_c,
        }
        if per_rep:
            d["per_rep"] = [asdict(r) for r in self.per_rep]
        return d


def ego_diff_in_means(outcomes, p, sig=None):
    """Difference in mean ego outcome between arms, with an unpooled SE and 95% normal CI.

    ``outcomes`` is aligned with ``p.egos``. The SE needs two egos per arm; with
    a single ego in an arm it is NaN.
    """
    y = np.asarray(outcomes, dtype=np.float64)
    arms = p.treatment[p.egos]
    if y.size != arms.size:
        raise EstimationError(f"{y.size} outcomes for {arms.size} egos")
    yt, yc = y[arms], y[~arms]
    if yt.size == 0 or yc.size == 0:
        raise EstimationError("both arms need at least one ego")
    tau = float(yt.mean() - yc.mean())
    if yt.size >= 2 and yc.size >= 2:
        se = float(np.sqrt(yt.var(ddof=1) / yt.size + yc.var(ddof=1) / yc.size))
        lo, hi = tau - Z95 * se, tau + Z95 * se
    else:
        se = lo = hi = float("nan")
    mt = sig.mean_sigma_treated if sig is not None else float("nan")
    mc = sig.mean_sigma_control if sig is not None else float("nan")
    return EstimateRecord(tau, int(yt.size), int(yc.size), se, lo, hi, mt, mc)


def analytic_bias_linear(m, sig):
    """Exact estimator bias under the linear-in-means model: beta2 (R - 1)."""
    if m.kind != "linear":
        raise EstimationError(f"linear bias needs a linear model, got {m.kind}")
    return m.params["beta2"] * (sig.r_statistic - 1.0)


def approx_bias_convex(g2, mean_sigma_t, mean_sigma_c):
    """First-order bias approximation for additive models.

    g2(mean_t) - g2(mean_c) - (g2(1) - g2(0)); non-positive whenever g2 is non-decreasing.
    """
    if not 0.0 <= mean_sigma_c <= mean_sigma_t <= 1.0:
        raise EstimationError(
            f"need 0 <= mean_sigma_c <= mean_sigma_t <= 1, got {mean_sigma_c}, {mean_sigma_t}"
        )
    return float((g2(mean_sigma_t) - g2(mean_sigma_c)) - (g2(1.0) - g2(0.0)))


def rescale_factor(ref):
    """Factor that makes ``ref``'s confidence interval one unit wide."""
    width = ref.ci_high - ref.ci_low
    if not width > 0:
        raise EstimationError("reference CI has zero or undefined width")
    return 1.0 / width


def format_rescaled(value, half_width):
    return f"{value:.3f}% ± {half_width:.3g}%"


def _one_replication(g, design, m, master_seed, rep):
    seed = replication_seed(master_seed, rep)
    try:
        p = build_partition(g, design.algorithm, design.q, seed, design.theta, design.max_iters)
        sig = exposure_summary(g, p)
        y = generate_outcomes(m, p, sig, seed)
        return ego_diff_in_means(y, p, sig)
    except (DesignError, EstimationError) as exc:
        raise EstimationError(f"replication {rep}: {exc}") from exc


def _serial_replication(args):
    with serial_kernels():
        return _one_replication(*args)


def monte_carlo_bias(g, design, m, reps, master_seed, threads=1):
    """Repeat the full design ``reps`` times and summarize the estimator's bias.

    Every replication redraws egos, arms, alter assignments and noise from
    seeds derived from ``(master_seed, rep)``; aggregation is in replication
    order, so the report does not depend on ``threads``.
    """
    if reps < 1:
        raise EstimationError("reps must be >= 1")
    jobs = [(g, design, m, master_seed, r) for r in range(reps)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_serial_replication, jobs))
    else:
        records = [_one_replication(*job) for job in jobs]

    tau = true_gate(m)
    taus = np.array([r.tau_hat for r in records])
    return SimReport(
        model=m.to_dict() if m.kind != "custom_additive" else {"kind": m.kind},
        design=asdict(design),
        reps=reps,
        master_seed=int(master_seed),
        true_tau=float(tau),
        mean_bias=float(taus.mean() - tau),
        bias_sd=float(taus.std(ddof=1)) if reps > 1 else 0.0,
        mean_sigma_t=float(np.mean([r.mean_sigma_t for r in records])),
        mean_sigma_c=float(np.mean([r.mean_sigma_c for r in records])),
        per_rep=records,
    )
