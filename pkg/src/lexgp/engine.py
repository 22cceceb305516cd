"""Generational evolution loop: evaluation, selection, variation, constant
hill climbing, elitism, and per-generation diagnostics."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import afp as afp_mod
from .data import SplitDataset
from .expr import (OperatorSet, Program, hill_climb_constants, point_mutation,
                   predict, random_program, subtree_crossover)
from .selection import (LEXICASE_METHODS, Method, SelectionConfig,
                        build_error_matrix, build_pass_matrix, lexicase_select,
                        random_select, tournament_select)


@dataclass
class EngineConfig:
    population_size: int = 1000
    generations: int = 1000
    crossover_fraction: float = 0.8   # remaining child slots use point mutation
    min_size: int = 3
    max_size: int = 50
    erc_range: tuple[float, float] = (-1.0, 1.0)
    elitism: bool = True
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    seed: int = 0
    trials: int = 30
    hill_climb_scale: float = 0.1

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population size must be >= 1")
        if self.generations < 0:
            raise ValueError("generation limit must be >= 0")
        if not 0.0 <= self.crossover_fraction <= 1.0:
            raise ValueError("crossover fraction must be in [0, 1]")
        if not 1 <= self.min_size <= self.max_size:
            raise ValueError(f"bad size limits [{self.min_size}, {self.max_size}]")
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")

    @property
    def size_limits(self) -> tuple[int, int]:
        return (self.min_size, self.max_size)


@dataclass
class GenerationRecord:
    generation: int
    best_train_mae: float
    diversity: float
    median_cases_used: float
    elapsed_s: float


@dataclass
class RunLog:
    records: list[GenerationRecord]
    best_program: Program
    best_train_mae: float
    test_mae: float
    total_s: float

    def without_timing(self) -> "RunLog":
        """Copy with the wall-clock fields zeroed, for determinism checks."""
        records = [replace(r, elapsed_s=0.0) for r in self.records]
        return RunLog(records, self.best_program, self.best_train_mae,
                      self.test_mae, 0.0)


def mae(predicted, targets) -> float:
    """Mean absolute error between two equal-length vectors."""
    predicted = np.asarray(predicted, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predicted.shape != targets.shape:
        raise ValueError(f"length mismatch {predicted.shape} vs {targets.shape}")
    return float(np.mean(np.abs(predicted - targets)))


def diversity(outputs) -> float:
    """Fraction of bitwise-distinct output vectors in the population."""
    outputs = np.asarray(outputs, dtype=float)
    if outputs.shape[0] < 1:
        raise ValueError("empty population")
    distinct = {row.tobytes() for row in outputs}
    return len(distinct) / outputs.shape[0]


def variation_slots(n_children: int, crossover_fraction: float) -> tuple[int, int]:
    """Deterministic split of child slots into (crossover, mutation) counts."""
    n_cross = int(round(crossover_fraction * n_children))
    return n_cross, n_children - n_cross


def _predict_population(population, X) -> np.ndarray:
    out = np.empty((len(population), X.shape[0]))
    for i, program in enumerate(population):
        out[i] = predict(program, X)
    return out


def run_trial(config: EngineConfig, split: SplitDataset, rng) -> RunLog:
    """Evolve one population on the training split and score the winner on
    the test split.

    Each generation: evaluate the population, build the error matrix (plus
    the pass matrix for epsilon methods), breed a full population of
    children through the configured selection method and variation mix,
    hill-climb their constants, then reinstate the previous best if every
    child is worse. The AFP method instead breeds from random parents and
    survives the combined pool through Pareto environmental selection.
    """
    start = time.perf_counter()
    X_train, y_train = split.train.X, split.train.y
    n_cases = X_train.shape[0]
    pop_size = config.population_size
    method = config.selection.method
    ops = OperatorSet(split.train.n_features, config.erc_range)
    limits = config.size_limits

    population = [random_program(limits, ops, rng) for _ in range(pop_size)]

    def train_maes(programs):
        return np.abs(_predict_population(programs, X_train) - y_train[None, :]).mean(axis=1)

    def breed(parents, count, rng, pick):
        """count children via the crossover/mutation mix, constants tuned."""
        children = []
        n_cross, n_mut = variation_slots(count, config.crossover_fraction)
        for _ in range(n_cross):
            a = parents[pick()]
            b = parents[pick()]
            children.append(subtree_crossover(a, b, limits, rng))
        for _ in range(n_mut):
            children.append(point_mutation(parents[pick()], ops, rng))
        return [hill_climb_constants(c, X_train, y_train, config.hill_climb_scale, rng)
                for c in children]

    records: list[GenerationRecord] = []
    for gen in range(config.generations):
        gen_start = time.perf_counter()
        outputs = _predict_population(population, X_train)
        errors = build_error_matrix(outputs, y_train)
        best_idx = int(np.argmin(errors.aggregate))
        best_mae = float(errors.aggregate[best_idx])
        elite = population[best_idx]
        unique_fraction = diversity(outputs)

        events = []

        if method is Method.AFP:
            def pick():
                ev = random_select(len(population), rng)
                events.append(ev)
                return ev.index

            hooks = afp_mod.AfpHooks(
                breed=lambda parents, count, hooks_rng: breed(parents, count, hooks_rng, pick),
                fresh=lambda hooks_rng: random_program(limits, ops, hooks_rng),
                train_mae=train_maes,
            )
            next_population = afp_mod.afp_generation(population, hooks, rng)
            aged_elite = True
        else:
            passes = (build_pass_matrix(errors, config.selection)
                      if method in LEXICASE_METHODS and method is not Method.LEX else None)
            if method in LEXICASE_METHODS:
                n_cross, n_mut = variation_slots(pop_size, config.crossover_fraction)
                orders = rng.permuted(
                    np.tile(np.arange(n_cases), (2 * n_cross + n_mut, 1)), axis=1)
                order_iter = iter(orders)

                def pick():
                    ev = lexicase_select(errors, passes, next(order_iter), rng)
                    events.append(ev)
                    return ev.index
            elif method is Method.TOURNAMENT:
                def pick():
                    ev = tournament_select(errors.aggregate,
                                           config.selection.tournament_size, rng, n_cases)
                    events.append(ev)
                    return ev.index
            elif method is Method.RANDOM:
                def pick():
                    ev = random_select(pop_size, rng)
                    events.append(ev)
                    return ev.index
            else:
                raise ValueError(f"unsupported method {method}")

            next_population = breed(population, pop_size, rng, pick)
            aged_elite = False

        if config.elitism:
            maes = train_maes(next_population)
            if float(maes.min()) > best_mae:
                worst = int(np.argmax(maes))
                if aged_elite:
                    elite.age += 1
                next_population[worst] = elite

        if len(next_population) != pop_size:
            raise RuntimeError(f"population size drifted to {len(next_population)}")
        median_cases = float(np.median([ev.cases_examined for ev in events])) if events else 0.0
        records.append(GenerationRecord(gen, best_mae, unique_fraction, median_cases,
                                        time.perf_counter() - gen_start))
        population = next_population

    final_maes = train_maes(population)
    best_idx = int(np.argmin(final_maes))
    best = population[best_idx]
    test_error = mae(predict(best, split.test.X), split.test.y)
    return RunLog(records, best, float(final_maes[best_idx]), test_error,
                  time.perf_counter() - start)
