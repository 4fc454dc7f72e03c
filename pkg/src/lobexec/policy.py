"""Action distributions on the simplex and heuristic execution policies.

The stochastic policies map an observation to a distribution over allocation
vectors ``a = (a^0, ..., a^K)`` on the simplex:

* logistic-normal: a network outputs the mean of a K-dimensional normal with
  shared diagonal variance; samples are pushed through the logistic
  transform. Training differentiates the underlying normal's log density
  only, since the transform's Jacobian does not depend on the parameters.
* Dirichlet: a network outputs K+1 concentration parameters through a
  softplus; samples come from normalized gamma draws.

Heuristic policies (submit-and-leave, time-slicing) issue lot counts to be
posted at the prevailing best ask instead of simplex allocations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import digamma, gammaln

from .nn import Mlp


class BoundaryPoint(Exception):
    """A simplex operation required a strictly interior point."""


# ----------------------------------------------------------------------
# simplex transforms
# ----------------------------------------------------------------------

def logistic(x: np.ndarray) -> np.ndarray:
    """Map K reals to a K+1 point on the simplex (max-shifted, overflow-safe)."""
    x = np.asarray(x, dtype=float)
    shift = max(float(np.max(x)), 0.0)
    exps = np.exp(x - shift)
    last = math.exp(-shift)
    denom = exps.sum() + last
    a = np.empty(x.shape[0] + 1)
    a[:-1] = exps / denom
    a[-1] = last / denom
    return a


def logistic_inv(a: np.ndarray) -> np.ndarray:
    """Log ratios against the last component; requires an interior point."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0.0):
        raise BoundaryPoint("logistic_inv requires all components > 0")
    return np.log(a[:-1]) - math.log(a[-1])


def softplus(y):
    """log(1 + e^y), overflow-safe for large positive or negative inputs."""
    y = np.asarray(y, dtype=float)
    return np.maximum(y, 0.0) + np.log1p(np.exp(-np.abs(y)))


def softplus_inv(s):
    """Inverse of softplus for s > 0."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("softplus_inv requires positive values")
    # log(e^s - 1) written to stay accurate for small and large s
    return s + np.log(-np.expm1(-s))


def variance_schedule(i: int, total: int, var_init: float, var_final: float) -> float:
    """Linear interpolation from var_init (i=1) to var_final (i=total)."""
    if not 1 <= i <= total:
        raise ValueError(f"schedule step {i} outside 1..{total}")
    if total == 1:
        return var_init
    return (var_final - var_init) * (i - 1) / (total - 1) + var_init


def normal_log_density(x: np.ndarray, mean: np.ndarray, variance: float) -> float:
    """Log density of a diagonal normal with shared variance."""
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    k = x.shape[-1]
    quad = float(((x - mean) ** 2).sum(axis=-1))
    return -0.5 * (k * math.log(2.0 * math.pi * variance) + quad / variance)


def simplex_log_density(a: np.ndarray, mean: np.ndarray, variance: float) -> float:
    """Full logistic-normal log density on the simplex (diagnostic only).

    Includes the 1/prod(a) change-of-variables term; training never needs it
    because the term does not depend on the network parameters.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0.0):
        raise BoundaryPoint("density undefined on the simplex boundary")
    x = logistic_inv(a)
    return normal_log_density(x, mean, variance) - float(np.log(a).sum())


def dirichlet_log_density(a: np.ndarray, alpha: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(a <= 0.0):
        raise BoundaryPoint("density undefined on the simplex boundary")
    return float(((alpha - 1.0) * np.log(a)).sum()
                 - gammaln(alpha).sum() + gammaln(alpha.sum()))


# ----------------------------------------------------------------------
# stochastic policies
# ----------------------------------------------------------------------

class LogisticNormalPolicy:
    """Logistic-normal allocations; the network outputs the normal's mean."""

    kind = "logistic_normal"

    def __init__(self, mean_net: Mlp, variance: float = 1.0):
        self.net = mean_net
        self.variance = variance

    @classmethod
    def create(cls, obs_dim: int, levels: int, rng: np.random.Generator,
               hidden: int = 128, bias: float = -1.0,
               variance: float = 1.0) -> "LogisticNormalPolicy":
        # near-zero output weights: the initial allocation is set by the bias,
        # which favors the held-back component so early episodes run full term
        net = Mlp.create([obs_dim, hidden, hidden, levels], rng,
                         gain=0.01, out_gain=1e-5, out_bias=bias)
        return cls(net, variance)

    @property
    def action_dim(self) -> int:
        return self.net.output_dim + 1

    def forward_batch(self, obs: np.ndarray):
        return self.net.forward(obs)

    def sample_batch(self, obs: np.ndarray, rng: np.random.Generator
                     ) -> tuple[np.ndarray, np.ndarray]:
        """Sample one action per observation row; returns (actions, normals)."""
        mu, _ = self.net.forward(obs)
        x = mu + math.sqrt(self.variance) * rng.standard_normal(mu.shape)
        actions = np.stack([logistic(row) for row in x])
        return actions, x

    def sample(self, obs: np.ndarray, rng: np.random.Generator):
        actions, x = self.sample_batch(obs[None, :], rng)
        mu, _ = self.net.forward(obs)
        return actions[0], x[0], normal_log_density(x[0], mu, self.variance)

    def mean_action(self, obs: np.ndarray) -> np.ndarray:
        mu, _ = self.net.forward(obs)
        return logistic(mu)

    def grad_log_density_wrt_output(self, pre: np.ndarray, outputs: np.ndarray
                                    ) -> np.ndarray:
        """d log phi(x | mu) / d mu, per batch row."""
        return (pre - outputs) / self.variance

    def log_density(self, pre: np.ndarray, outputs: np.ndarray) -> np.ndarray:
        k = pre.shape[-1]
        quad = ((pre - outputs) ** 2).sum(axis=-1)
        return -0.5 * (k * math.log(2.0 * math.pi * self.variance)
                       + quad / self.variance)

    def to_doc(self) -> dict:
        return {"kind": self.kind, "variance": self.variance,
                "net": self.net.to_doc()}


class DirichletPolicy:
    """Dirichlet allocations; the network outputs pre-softplus concentrations."""

    kind = "dirichlet"

    def __init__(self, alpha_net: Mlp):
        self.net = alpha_net

    @classmethod
    def create(cls, obs_dim: int, levels: int, rng: np.random.Generator,
               hidden: int = 128,
               init_concentration: np.ndarray | None = None) -> "DirichletPolicy":
        if init_concentration is None:
            init_concentration = np.ones(levels + 1)
            init_concentration[-1] = 10.0  # hold-back component dominates
        bias = softplus_inv(np.asarray(init_concentration, dtype=float))
        net = Mlp.create([obs_dim, hidden, hidden, levels + 1], rng,
                         gain=0.01, out_gain=1e-5, out_bias=bias)
        return cls(net)

    @property
    def action_dim(self) -> int:
        return self.net.output_dim

    def forward_batch(self, obs: np.ndarray):
        return self.net.forward(obs)

    def alphas(self, obs: np.ndarray) -> np.ndarray:
        raw, _ = self.net.forward(obs)
        return softplus(raw)

    def sample_batch(self, obs: np.ndarray, rng: np.random.Generator
                     ) -> tuple[np.ndarray, np.ndarray]:
        """Returns (actions, actions): the action itself is the pre-sample."""
        alpha = softplus(self.net.forward(obs)[0])
        gams = rng.gamma(alpha)
        # guard against zero draws at tiny concentrations
        gams = np.maximum(gams, 1e-300)
        actions = gams / gams.sum(axis=-1, keepdims=True)
        return actions, actions

    def sample(self, obs: np.ndarray, rng: np.random.Generator):
        actions, _ = self.sample_batch(obs[None, :], rng)
        alpha = self.alphas(obs)
        return actions[0], actions[0], dirichlet_log_density(actions[0], alpha)

    def mean_action(self, obs: np.ndarray) -> np.ndarray:
        alpha = self.alphas(obs)
        return alpha / alpha.sum()

    def grad_log_density_wrt_output(self, pre: np.ndarray, outputs: np.ndarray
                                    ) -> np.ndarray:
        """d log Dir(a | softplus(y)) / d y, per batch row."""
        alpha = softplus(outputs)
        a = np.maximum(pre, 1e-300)
        inner = (np.log(a) - digamma(alpha)
                 + digamma(alpha.sum(axis=-1, keepdims=True)))
        sigmoid = 1.0 / (1.0 + np.exp(-outputs))  # softplus'
        return inner * sigmoid

    def log_density(self, pre: np.ndarray, outputs: np.ndarray) -> np.ndarray:
        alpha = softplus(outputs)
        a = np.maximum(pre, 1e-300)
        return (((alpha - 1.0) * np.log(a)).sum(axis=-1)
                - gammaln(alpha).sum(axis=-1) + gammaln(alpha.sum(axis=-1)))

    def to_doc(self) -> dict:
        return {"kind": self.kind, "net": self.net.to_doc()}


def save_policy(policy, path) -> None:
    Path(path).write_text(json.dumps(policy.to_doc()) + "\n")


def load_policy(path):
    doc = json.loads(Path(path).read_text())
    net = Mlp.from_doc(doc["net"])
    if doc["kind"] == LogisticNormalPolicy.kind:
        return LogisticNormalPolicy(net, variance=float(doc["variance"]))
    if doc["kind"] == DirichletPolicy.kind:
        return DirichletPolicy(net)
    raise ValueError(f"unknown policy kind {doc['kind']!r}")


# ----------------------------------------------------------------------
# heuristic benchmarks
# ----------------------------------------------------------------------

@dataclass
class SubmitAndLeave:
    """Posts the whole position at the best ask on the first step."""

    lots: int

    def lots_at_ask(self, step: int) -> int:
        return self.lots if step == 0 else 0


@dataclass
class Twap:
    """Splits the position into near-equal blocks posted at the best ask.

    The remainder is spread over the earliest steps.
    """

    lots: int
    steps: int

    def lots_at_ask(self, step: int) -> int:
        base, rem = divmod(self.lots, self.steps)
        return base + (1 if step < rem else 0)

    def schedule(self) -> list[int]:
        return [self.lots_at_ask(n) for n in range(self.steps)]
