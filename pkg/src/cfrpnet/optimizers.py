"""Population-based continuous minimizers: PSO, GWO, and BA.

All three minimize a scalar objective over a bounded box and record an
elitist (non-increasing) best-fitness trace.

Randomness contract: the config seed expands into one independent stream
per population member, spawned in index order from a single SeedSequence.
Member i draws, in a fixed order, first its initial position and then its
per-iteration variates (listed in each run function). Fitness updates are
reduced in member-index order, so results cannot depend on how objective
evaluations are scheduled.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .neuralnet import NetworkTopology, forward_batch, parameter_count

Objective = Callable[[np.ndarray], float]


class ObjectiveError(RuntimeError):
    """The objective returned a non-finite value."""

    def __init__(self, value: float, iteration: int, member: int):
        super().__init__(
            f"objective returned non-finite value {value} at iteration {iteration}, member {member}")
        self.value = value
        self.iteration = iteration
        self.member = member


@dataclass
class SearchSpace:
    """Axis-aligned box over which the optimizers search."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise ValueError("lower and upper bounds must be 1-D arrays of equal length")
        if not np.all(self.upper > self.lower):
            raise ValueError("every upper bound must exceed its lower bound")

    @classmethod
    def symmetric(cls, dimension: int, half_width: float) -> "SearchSpace":
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        if half_width <= 0.0:
            raise ValueError("half_width must be positive")
        return cls(np.full(dimension, -half_width), np.full(dimension, half_width))

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


def _from_dict(cls, data: Mapping):
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ValueError(f"unknown {cls.__name__} key(s): {', '.join(unknown)}")
    return cls(**data)


@dataclass
class PsoConfig:
    population: int = 70
    iterations: int = 900
    inertia_weight: float = 0.729
    cognitive_weight: float = 1.49445
    social_weight: float = 1.49445
    velocity_clamp: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.inertia_weight < 0.0:
            raise ValueError("inertia_weight must be >= 0")
        if self.cognitive_weight <= 0.0 or self.social_weight <= 0.0:
            raise ValueError("cognitive_weight and social_weight must be positive")
        if not 0.0 < self.velocity_clamp <= 1.0:
            raise ValueError("velocity_clamp must lie in (0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @classmethod
    def from_dict(cls, data: Mapping) -> "PsoConfig":
        return _from_dict(cls, data)


@dataclass
class GwoConfig:
    population: int = 75
    iterations: int = 900
    seed: int = 0

    def __post_init__(self):
        # three leaders are needed, so at least three wolves
        if self.population < 3:
            raise ValueError("population must be >= 3")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @classmethod
    def from_dict(cls, data: Mapping) -> "GwoConfig":
        return _from_dict(cls, data)


@dataclass
class BaConfig:
    population: int = 80
    iterations: int = 900
    f_min: float = 0.0
    f_max: float = 2.0
    loudness: float = 1.0
    pulse_rate: float = 0.5
    alpha: float = 0.9
    gamma: float = 0.9
    velocity_clamp: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.f_max > self.f_min >= 0.0:
            raise ValueError("frequency range must satisfy f_max > f_min >= 0")
        if self.loudness <= 0.0:
            raise ValueError("loudness must be positive")
        if not 0.0 <= self.pulse_rate <= 1.0:
            raise ValueError("pulse_rate must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        if not 0.0 < self.velocity_clamp <= 1.0:
            raise ValueError("velocity_clamp must lie in (0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @classmethod
    def from_dict(cls, data: Mapping) -> "BaConfig":
        return _from_dict(cls, data)


@dataclass
class OptimizationTrace:
    """Elitist optimization record.

    ``best_fitness[0]`` is the best after initial evaluation; entry t is
    the best after iteration t. ``loudness`` and ``acceptances`` are BA
    diagnostics, None for the other algorithms.
    """

    best_fitness: np.ndarray
    best_position: np.ndarray
    evaluations: int
    loudness: np.ndarray | None = None
    acceptances: np.ndarray | None = None

    def __post_init__(self):
        self.best_fitness = np.asarray(self.best_fitness, dtype=float)
        if np.any(np.diff(self.best_fitness) > 0.0):
            raise ValueError("best-fitness trace must be non-increasing")

    @property
    def final_fitness(self) -> float:
        return float(self.best_fitness[-1])


def trace_csv(history: Sequence[float]) -> str:
    """Render a fitness/loss history as iteration,best_fitness CSV."""
    lines = ["iteration,best_fitness"]
    lines.extend(f"{i},{float(v)!r}" for i, v in enumerate(history))
    return "\n".join(lines) + "\n"


def _streams(seed: int, population: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(population)
    return [np.random.default_rng(c) for c in children]


def _checked(objective: Objective, x: np.ndarray, iteration: int, member: int) -> float:
    value = float(objective(x))
    if not math.isfinite(value):
        raise ObjectiveError(value, iteration, member)
    return value


def pso_velocity_update(v, x, pbest, gbest, r1, r2, w, c1, c2):
    """One particle's velocity: inertia plus cognitive and social pulls."""
    return w * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x)


def pso_run(config: PsoConfig, space: SearchSpace, objective: Objective) -> OptimizationTrace:
    """Global-best particle swarm with inertia weight.

    Per particle and iteration the stream yields r1 then r2 (one vector
    each). Velocities start at zero, are clamped per dimension to
    velocity_clamp times the box width, and positions are clipped to the
    box. The velocity update uses the previous iteration's global best.
    """
    streams = _streams(config.seed, config.population)
    dim = space.dimension
    x = np.array([s.uniform(space.lower, space.upper) for s in streams])
    v = np.zeros_like(x)
    vmax = config.velocity_clamp * space.width

    fitness = np.array([_checked(objective, x[i], 0, i) for i in range(config.population)])
    pbest = x.copy()
    pbest_f = fitness.copy()
    g = int(np.argmin(pbest_f))
    gbest = pbest[g].copy()
    gbest_f = float(pbest_f[g])
    history = [gbest_f]
    evaluations = config.population

    for t in range(1, config.iterations + 1):
        for i in range(config.population):
            r1 = streams[i].random(dim)
            r2 = streams[i].random(dim)
            v[i] = pso_velocity_update(v[i], x[i], pbest[i], gbest, r1, r2,
                                       config.inertia_weight, config.cognitive_weight,
                                       config.social_weight)
            np.clip(v[i], -vmax, vmax, out=v[i])
            x[i] = space.clip(x[i] + v[i])
        for i in range(config.population):
            f = _checked(objective, x[i], t, i)
            evaluations += 1
            if f < pbest_f[i]:
                pbest_f[i] = f
                pbest[i] = x[i].copy()
                if f < gbest_f:
                    gbest_f = f
                    gbest = x[i].copy()
        history.append(gbest_f)
    return OptimizationTrace(np.array(history), gbest, evaluations)


def gwo_move(x, leaders, a, rng, space: SearchSpace):
    """One wolf's position update toward the three leaders.

    For each leader the stream yields the A-vector variates then the
    C-vector variates. With a = 0 the update collapses onto the mean of
    the leader positions.
    """
    dim = x.size
    acc = np.zeros(dim)
    for leader in leaders:
        coef_a = 2.0 * a * rng.random(dim) - a
        coef_c = 2.0 * rng.random(dim)
        acc += leader - coef_a * np.abs(coef_c * leader - x)
    return space.clip(acc / 3.0)


def gwo_run(config: GwoConfig, space: SearchSpace, objective: Objective) -> OptimizationTrace:
    """Grey wolf optimizer with linearly decaying control scalar.

    The three best-so-far wolves (alpha, beta, delta) steer every move;
    the control scalar a decays linearly from 2 to exactly 0 over the
    iterations.
    """
    streams = _streams(config.seed, config.population)
    x = np.array([s.uniform(space.lower, space.upper) for s in streams])

    leader_pos = [None, None, None]
    leader_f = [math.inf, math.inf, math.inf]

    def offer(position, f):
        if f < leader_f[0]:
            leader_pos[2], leader_f[2] = leader_pos[1], leader_f[1]
            leader_pos[1], leader_f[1] = leader_pos[0], leader_f[0]
            leader_pos[0], leader_f[0] = position.copy(), f
        elif f < leader_f[1]:
            leader_pos[2], leader_f[2] = leader_pos[1], leader_f[1]
            leader_pos[1], leader_f[1] = position.copy(), f
        elif f < leader_f[2]:
            leader_pos[2], leader_f[2] = position.copy(), f

    for i in range(config.population):
        offer(x[i], _checked(objective, x[i], 0, i))
    history = [leader_f[0]]
    evaluations = config.population

    for t in range(1, config.iterations + 1):
        a = 2.0 * (1.0 - t / config.iterations)
        for i in range(config.population):
            x[i] = gwo_move(x[i], leader_pos, a, streams[i], space)
        for i in range(config.population):
            offer(x[i], _checked(objective, x[i], t, i))
            evaluations += 1
        history.append(leader_f[0])
    return OptimizationTrace(np.array(history), leader_pos[0], evaluations)


def ba_flight(x, v, gbest, frequency, vmax, space: SearchSpace):
    """One bat's frequency-scaled flight; returns (candidate, new velocity).

    A bat sitting at the global best with zero velocity stays put for any
    frequency.
    """
    v_new = np.clip(v + (x - gbest) * frequency, -vmax, vmax)
    return space.clip(x + v_new), v_new


def ba_run(config: BaConfig, space: SearchSpace, objective: Objective) -> OptimizationTrace:
    """Bat algorithm with loudness decay and rising pulse rate.

    Per bat and iteration the stream yields: the frequency variate, the
    local-walk trigger, the walk offsets (only when triggered), and the
    acceptance variate. With probability equal to its pulse rate a bat
    abandons its flight for a local walk around the global best, scaled by
    the mean loudness. A candidate replaces the bat's position only when
    the acceptance draw falls below the bat's loudness AND the fitness
    improves; each acceptance decays the loudness by alpha and resets the
    pulse rate to pulse_rate * (1 - exp(-gamma * t)). The global best
    tracks every evaluated candidate.
    """
    streams = _streams(config.seed, config.population)
    dim = space.dimension
    x = np.array([s.uniform(space.lower, space.upper) for s in streams])
    v = np.zeros_like(x)
    vmax = config.velocity_clamp * space.width

    fitness = np.array([_checked(objective, x[i], 0, i) for i in range(config.population)])
    loudness = np.full(config.population, config.loudness)
    pulse = np.full(config.population, config.pulse_rate)
    acceptances = np.zeros(config.population, dtype=int)
    g = int(np.argmin(fitness))
    gbest = x[g].copy()
    gbest_f = float(fitness[g])
    history = [gbest_f]
    evaluations = config.population

    for t in range(1, config.iterations + 1):
        mean_loudness = float(loudness.mean())
        for i in range(config.population):
            rng = streams[i]
            beta = rng.random()
            frequency = config.f_min + (config.f_max - config.f_min) * beta
            candidate, v[i] = ba_flight(x[i], v[i], gbest, frequency, vmax, space)
            if rng.random() < pulse[i]:
                walk = rng.uniform(-1.0, 1.0, dim)
                candidate = space.clip(gbest + walk * mean_loudness)
            f = _checked(objective, candidate, t, i)
            evaluations += 1
            accept = rng.random()
            if accept < loudness[i] and f < fitness[i]:
                x[i] = candidate
                fitness[i] = f
                loudness[i] *= config.alpha
                pulse[i] = config.pulse_rate * (1.0 - math.exp(-config.gamma * t))
                acceptances[i] += 1
            if f < gbest_f:
                gbest_f = f
                gbest = candidate.copy()
        history.append(gbest_f)
    return OptimizationTrace(np.array(history), gbest, evaluations,
                             loudness=loudness, acceptances=acceptances)


def objective_from_dataset(topology: NetworkTopology, X, y) -> Objective:
    """MSE of forward-pass predictions on a fixed normalized training set.

    The returned objective is pure, deterministic, and invariant to the
    order of the training rows.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training set must be a non-empty 2-D array")
    targets = y[:, None] if y.ndim == 1 else y
    if targets.shape != (X.shape[0], topology.output_size):
        raise ValueError(f"targets have shape {y.shape}, expected ({X.shape[0]}, {topology.output_size})")
    expected = parameter_count(topology)

    def objective(position: np.ndarray) -> float:
        w = np.asarray(position, dtype=float)
        if w.shape != (expected,):
            raise ValueError(f"position has length {w.size}, topology needs {expected}")
        pred = forward_batch(topology, w, X)
        return float(np.mean((pred - targets) ** 2))

    return objective


_RUNNERS = {"pso": (pso_run, PsoConfig), "gwo": (gwo_run, GwoConfig), "ba": (ba_run, BaConfig)}


def train_hybrid(
    algorithm: str,
    topology: NetworkTopology,
    X,
    y,
    config=None,
    half_width: float = 0.5,
) -> tuple[np.ndarray, OptimizationTrace]:
    """Train the network's flat weights with one of the swarm optimizers.

    The search box is [-half_width, half_width] per parameter, matching
    the uniform initialization of the gradient baseline so both explore
    the same space.
    """
    if algorithm not in _RUNNERS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {tuple(_RUNNERS)}")
    runner, config_cls = _RUNNERS[algorithm]
    cfg = config_cls() if config is None else config
    if not isinstance(cfg, config_cls):
        raise ValueError(f"{algorithm} expects a {config_cls.__name__}, got {type(cfg).__name__}")
    space = SearchSpace.symmetric(parameter_count(topology), half_width)
    objective = objective_from_dataset(topology, X, y)
    trace = runner(cfg, space, objective)
    return trace.best_position.copy(), trace
