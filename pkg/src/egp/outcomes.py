"""Additive potential-outcome models Y = g1(W) + g2(sigma) + noise."""
import math
from dataclasses import dataclass, field

import numpy as np

from egp.rng import stream

KINDS = ("linear", "convex_exp", "clipped_linear", "custom_additive")
_PARAM_NAMES = {
    "linear": ("beta0", "beta1", "beta2"),
    "convex_exp": ("a", "b", "c"),
    "clipped_linear": ("beta1", "beta2", "beta3", "theta_m"),
}
_GRID_STEP = 1e-3


class ModelError(ValueError):
    pass


def check_a2(g2, step=_GRID_STEP, tol=1e-12):
    """Grid check that g2 is non-decreasing with non-positive second differences on [0, 1]."""
    x = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    y = np.array([g2(v) for v in x], dtype=np.float64)
    scale = tol * max(1.0, float(np.abs(y).max()))
    first = np.diff(y)
    second = np.diff(y, n=2)
    return bool(np.all(first >= -scale) and np.all(second <= scale))


@dataclass(frozen=True)
class OutcomeModel:
    kind: str
    params: dict = field(default_factory=dict)
    noise_sd: float = 1.0
    g1_fn: object = field(default=None, repr=False, compare=False)
    g2_fn: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")
        if self.noise_sd < 0:
            raise ModelError("noise_sd must be >= 0")
        if self.kind == "custom_additive":
            if self.g1_fn is None or self.g2_fn is None:
                raise ModelError("custom_additive needs g1 and g2 callables")
        else:
            missing = set(_PARAM_NAMES[self.kind]) - set(self.params)
            if missing:
                raise ModelError(f"{self.kind} model missing parameters {sorted(missing)}")
        if self.kind in ("convex_exp", "clipped_linear") or (
            self.kind == "custom_additive" and self.params.get("require_a2", True)
        ):
            if not check_a2(self.g2):
                raise ModelError(f"{self.kind} g2 is not non-decreasing with g2'' <= 0 on [0, 1]")

    def g1(self, w):
        p = self.params
        if self.kind == "linear":
            return p["beta0"] + p["beta1"] * w
        if self.kind == "convex_exp":
            return p["a"] + p["b"] * w
        if self.kind == "clipped_linear":
            return p["beta1"] + p["beta2"] * w
        return self.g1_fn(w)

    def g2(self, sigma):
        p = self.params
        if self.kind == "linear":
            return p["beta2"] * sigma
        if self.kind == "convex_exp":
            return -np.exp(-p["c"] * sigma)
        if self.kind == "clipped_linear":
            return p["beta3"] * np.minimum(sigma, p["theta_m"])
        return self.g2_fn(sigma)

    def to_dict(self):
        if self.kind == "custom_additive":
            raise ModelError("custom_additive models are not serializable")
        return {"kind": self.kind, "params": dict(self.params), "noise_sd": self.noise_sd}

    @classmethod
    def from_dict(cls, d):
        params = d.get("params", {})
        if isinstance(params, (list, tuple)):
            names = _PARAM_NAMES.get(d["kind"])
            if names is None or len(params) != len(names):
                raise ModelError(f"{d['kind']} expects parameters {names}")
            params = dict(zip(names, params))
        return cls(d["kind"], {k: float(v) for k, v in params.items()}, float(d.get("noise_sd", 1.0)))


def linear(beta0=1.0, beta1=1.0, beta2=1.0, noise_sd=1.0):
    return OutcomeModel("linear", {"beta0": beta0, "beta1": beta1, "beta2": beta2}, noise_sd)


def convex_exp(a=2.0, b=1.0, c=3.0, noise_sd=1.0):
    return OutcomeModel("convex_exp", {"a": a, "b": b, "c": c}, noise_sd)


def clipped_linear(beta1, beta2, beta3, theta_m, noise_sd=1.0):
    return OutcomeModel(
        "clipped_linear", {"beta1": beta1, "beta2": beta2, "beta3": beta3, "theta_m": theta_m}, noise_sd
    )


def custom_additive(g1, g2, noise_sd=1.0, require_a2=True):
    return OutcomeModel("custom_additive", {"require_a2": require_a2}, noise_sd, g1, g2)


def true_gate(m):
    """Effect of moving everyone from control (sigma = 0) to treatment (sigma = 1)."""
    p = m.params
    if m.kind == "linear":
        return p["beta1"] + p["beta2"]
    if m.kind == "convex_exp":
        return p["b"] + 1.0 - math.exp(-p["c"])
    if m.kind == "clipped_linear":
        return p["beta2"] + p["beta3"] * min(p["theta_m"], 1.0)
    return float((m.g1(1) - m.g1(0)) + (m.g2(1.0) - m.g2(0.0)))


def generate_outcomes(m, p, sig, rng_seed):
    """Outcomes for the egos of ``sig`` (same order); alters produce no data."""
    w = p.treatment[sig.ego_ids].astype(np.float64)
    y = np.asarray(m.g1(w), dtype=np.float64) + np.asarray(m.g2(sig.sigma), dtype=np.float64)
    if m.noise_sd > 0:
        y = y + stream(rng_seed, "noise").normal(0.0, m.noise_sd, size=y.size)
    return y
