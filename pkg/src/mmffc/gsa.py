"""Gravitational search update used at both the client and server level."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class GsaParams:
    G0: float = 100.0
    alpha: float = 20.0
    epsilon: float = 1e-9
    total_iterations: int = 1

    def __post_init__(self):
        if self.G0 <= 0 or self.alpha <= 0 or self.epsilon <= 0 or self.total_iterations < 1:
            raise ValueError("GSA parameters must be positive")

    def with_horizon(self, total_iterations: int) -> "GsaParams":
        return replace(self, total_iterations=total_iterations)


@dataclass
class Agent:
    position: np.ndarray
    velocity: np.ndarray
    fitness: float | None = None  # None means stale

    @classmethod
    def at(cls, position, fitness=None):
        position = np.asarray(position, dtype=np.float64)
        return cls(position, np.zeros_like(position), fitness)


def masses(fitnesses) -> np.ndarray:
    """Normalized masses; the best agent is heaviest, the worst weighs zero."""
    fit = np.asarray(fitnesses, dtype=np.float64)
    if fit.ndim != 1 or fit.shape[0] == 0:
        raise ValueError("need at least one fitness value")
    best, worst = fit.max(), fit.min()
    if best == worst:
        return np.full(fit.shape[0], 1.0 / fit.shape[0])
    m = (fit - worst) / (best - worst)
    return m / m.sum()


def gravitational_constant(t: int, params: GsaParams) -> float:
    if not 0 <= t <= params.total_iterations:
        raise ValueError(f"t={t} outside [0, {params.total_iterations}]")
    return params.G0 * math.exp(-params.alpha * t / params.total_iterations)


def kbest(t: int, total: int, n: int) -> int:
    """Elite count shrinking linearly from ``n`` (t=0) to 1 (t=total-1)."""
    if n < 1:
        raise ValueError("need at least one agent")
    if total <= 1:
        return n
    value = n - (n - 1) * t / (total - 1)
    return int(min(n, max(1, math.floor(value + 0.5))))


def step_arrays(X, V, fit, t, params: GsaParams, rng, lower, upper):
    """One GSA move of a population held as ``(n, d)`` arrays.

    Random draws: an ``(n, n)`` matrix of per-pair force weights, then an
    ``(n, d)`` matrix of velocity-inertia weights, in that order.
    """
    X = np.asarray(X, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    fit = np.asarray(fit, dtype=np.float64)
    n = X.shape[0]
    if np.isnan(fit).any():
        raise ValueError("every agent must be evaluated before a step")
    M = masses(fit)
    G = gravitational_constant(t, params)
    k = kbest(t, params.total_iterations, n)
    # stable sort on -fitness: ties favour the lower index
    elite = np.argsort(-fit, kind="stable")[:k]

    r = rng.random((n, n))
    inertia = rng.random(X.shape)

    diff = X[None, :, :] - X[:, None, :]  # diff[i, j] = x_j - x_i
    R = np.sqrt(np.einsum("ijd,ijd->ij", diff, diff))
    W = np.zeros((n, n))
    W[:, elite] = r[:, elite] * G * M[None, elite] / (R[:, elite] + params.epsilon)
    np.fill_diagonal(W, 0.0)
    # mass of agent i cancels between force and acceleration
    accel = np.einsum("ij,ijd->id", W, diff)

    V_new = inertia * V + accel
    X_new = np.clip(X + V_new, lower, upper)
    return X_new, V_new


def step(agents: list[Agent], t: int, params: GsaParams, rng, lower, upper) -> list[Agent]:
    if not agents:
        return []
    if any(a.fitness is None for a in agents):
        raise ValueError("every agent must be evaluated before a step")
    X = np.stack([a.position for a in agents])
    V = np.stack([a.velocity for a in agents])
    fit = np.array([a.fitness for a in agents], dtype=np.float64)
    X, V = step_arrays(X, V, fit, t, params, rng, lower, upper)
    return [Agent(x, v, None) for x, v in zip(X, V)]
