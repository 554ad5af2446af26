"""Per-slot placement search with a genetic algorithm.

One genome is a bitstring of 5 * bits_per_coordinate bits encoding
(uav_x, uav_y, uav_z, vehicle_x, vehicle_y) as fixed-point fractions of
their bounds, so every decoded placement satisfies the region and altitude
constraints by construction.  Fitness is the slot sum rate minus a penalty
proportional to the total SINR shortfall below the threshold.  Selection is
tournament, crossover single-point, mutation independent bit flips, and the
top elitism_count genomes carry over unchanged, which makes the
per-generation best fitness non-decreasing.

Randomness is consumed in a fixed order (initial population bits, then per
offspring pair: two tournaments, crossover coin and cut, two mutation
masks), so a run is reproducible from its generator.  Fitness evaluation
draws no randomness and is batched over the whole population.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import channel, noma, scenario
from .channel import Placement
from .scenario import ScenarioConfig

NUM_COORDS = 5

# Spawn-key "kind" component of per-slot GA streams.  All surface variants
# of one access mode share streams (common random numbers), so scenario
# differences come from the model, never from different draws; in
# particular the static variant's first slot and a no-surface run with a
# zero reflection coefficient reproduce the joint run exactly.
_GA_KINDS = {"noma": 0, "oma": 1}


@dataclass
class GaRunRecord:
    """Per-generation best/mean fitness, the winning genome, and eval count."""

    best_fitness: list[float]
    mean_fitness: list[float]
    best_genome: np.ndarray
    evaluations: int


def genome_bounds(cfg: ScenarioConfig) -> list[tuple[float, float]]:
    """(lo, hi) per encoded coordinate, in genome order."""
    r = cfg.region
    return [
        (r.x_min, r.x_max),
        (r.y_min, r.y_max),
        (cfg.ga.uav_alt_min, cfg.ga.uav_alt_max),
        (r.x_min, r.x_max),
        (r.y_min, r.y_max),
    ]


def genome_length(cfg: ScenarioConfig) -> int:
    return NUM_COORDS * cfg.ga.bits_per_coordinate


def encode(placement: Placement, bounds, bits: int) -> np.ndarray:
    """Quantize a placement onto the bit grid; raises if out of bounds."""
    values = [*placement.uav, *placement.irs]
    levels = (1 << bits) - 1
    genome = np.zeros(NUM_COORDS * bits, dtype=np.uint8)
    for c, (v, (lo, hi)) in enumerate(zip(values, bounds)):
        if not (lo - 1e-9 <= v <= hi + 1e-9):
            raise ValueError(f"coordinate {c} value {v} outside [{lo}, {hi}]")
        code = int(round((v - lo) / (hi - lo) * levels)) if hi > lo else 0
        for j in range(bits):
            genome[c * bits + j] = (code >> (bits - 1 - j)) & 1
    return genome


def decode_batch(genomes: np.ndarray, bounds, bits: int) -> np.ndarray:
    """Decode (P, L) bit arrays to (P, 5) coordinates."""
    genomes = np.atleast_2d(genomes)
    if genomes.shape[1] != NUM_COORDS * bits:
        raise ValueError(f"genome length {genomes.shape[1]} != {NUM_COORDS * bits}")
    weights = (1 << np.arange(bits - 1, -1, -1)).astype(np.int64)
    codes = genomes.reshape(genomes.shape[0], NUM_COORDS, bits).astype(np.int64) @ weights
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return lo + codes / ((1 << bits) - 1) * (hi - lo)


def decode(genome: np.ndarray, bounds, bits: int) -> Placement:
    coords = decode_batch(genome, bounds, bits)[0]
    return Placement(uav=(coords[0], coords[1], coords[2]), irs=(coords[3], coords[4]))


def _fitness_batch(genomes: np.ndarray, users_xy, cfg: ScenarioConfig,
                   derived: scenario.DerivedParams, irs_mode: str, access: str,
                   fixed_irs=None, prev_placement: Optional[Placement] = None) -> np.ndarray:
    """Penalized fitness for every genome in one vectorized pass."""
    bounds = genome_bounds(cfg)
    coords = decode_batch(genomes, bounds, cfg.ga.bits_per_coordinate)
    uav = coords[:, :3]
    irs = coords[:, 3:]
    if fixed_irs is not None:
        irs = np.broadcast_to(np.asarray(fixed_irs, dtype=float), irs.shape)
    gu, gi = channel.link_gains(uav, irs, users_xy, cfg,
                                irs_enabled=(irs_mode != "no-irs"))
    ev = noma.evaluate_batch(gu, gi, rho=derived.rho_linear,
                             gamma_th=derived.gamma_th_linear,
                             noise_linear=derived.noise_linear_mw,
                             decay=cfg.power.ftpa_decay,
                             favor_strong=cfg.power.ftpa_favor_strong, access=access)
    fit = ev["sum_rate"] - cfg.ga.sinr_penalty_weight * ev["deficit"]
    limit = cfg.ga.max_slot_displacement
    if limit is not None and prev_placement is not None:
        px, py, _ = prev_placement.uav
        uav_move = np.hypot(uav[:, 0] - px, uav[:, 1] - py)
        excess = np.maximum(0.0, uav_move - limit)
        if irs_mode != "no-irs" and fixed_irs is None:
            qx, qy = prev_placement.irs
            excess = excess + np.maximum(0.0, np.hypot(irs[:, 0] - qx, irs[:, 1] - qy) - limit)
        fit = fit - cfg.ga.sinr_penalty_weight * excess
    return fit


def fitness(genome: np.ndarray, users_xy, cfg: ScenarioConfig, *,
            irs_mode: str = "m-irs", access: str = "noma", fixed_irs=None,
            prev_placement: Optional[Placement] = None) -> float:
    """Penalized objective of a single genome."""
    return float(_fitness_batch(np.atleast_2d(genome), users_xy, cfg, scenario.derive(cfg),
                                irs_mode, access, fixed_irs, prev_placement)[0])


def tournament_select(population: np.ndarray, fitnesses: np.ndarray,
                      tournament_size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw tournament_size distinct genomes; return the fittest (ties -> lowest index)."""
    n = len(population)
    if n == 0:
        raise ValueError("empty population")
    drawn = np.sort(rng.choice(n, size=tournament_size, replace=False))
    winner = drawn[np.argmax(fitnesses[drawn])]
    return population[winner].copy()


def crossover(parent_a: np.ndarray, parent_b: np.ndarray, crossover_prob: float,
              rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Single-point suffix swap with the given probability, else copies."""
    if parent_a.shape != parent_b.shape:
        raise ValueError("parent genomes must have equal length")
    child_a = parent_a.copy()
    child_b = parent_b.copy()
    length = parent_a.size
    if length >= 2 and rng.random() < crossover_prob:
        cut = int(rng.integers(1, length))
        child_a[cut:] = parent_b[cut:]
        child_b[cut:] = parent_a[cut:]
    return child_a, child_b


def mutate(genome: np.ndarray, mutation_prob_per_bit: float,
           rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with the given probability."""
    flips = (rng.random(genome.size) < mutation_prob_per_bit).astype(np.uint8)
    return genome ^ flips


def optimize_slot(users_xy, cfg: ScenarioConfig, rng: np.random.Generator, *,
                  irs_mode: str = "m-irs", access: str = "noma", fixed_irs=None,
                  warm_start_genome: Optional[np.ndarray] = None,
                  prev_placement: Optional[Placement] = None,
                  initial_population: Optional[np.ndarray] = None
                  ) -> tuple[Placement, GaRunRecord]:
    """Run the GA for one slot; returns the best placement and its run record."""
    ga = cfg.ga
    length = genome_length(cfg)
    bounds = genome_bounds(cfg)
    derived = scenario.derive(cfg)
    mut_p = ga.mutation_prob_per_bit if ga.mutation_prob_per_bit is not None else 1.0 / length

    if initial_population is not None:
        population = np.array(initial_population, dtype=np.uint8)
        if population.shape != (ga.population_size, length):
            raise ValueError("initial_population must have shape (population_size, genome_length)")
    else:
        population = (rng.random((ga.population_size, length)) < 0.5).astype(np.uint8)
        if warm_start_genome is not None:
            population[0] = warm_start_genome

    def evaluate(pop):
        return _fitness_batch(pop, users_xy, cfg, derived, irs_mode, access,
                              fixed_irs, prev_placement)

    fit = evaluate(population)
    evaluations = ga.population_size
    best_per_gen = [float(fit.max())]
    mean_per_gen = [float(fit.mean())]

    for _ in range(ga.max_iterations):
        ranking = np.argsort(-fit, kind="stable")
        next_pop = [population[i].copy() for i in ranking[:ga.elitism_count]]
        while len(next_pop) < ga.population_size:
            parent_a = tournament_select(population, fit, ga.tournament_size, rng)
            parent_b = tournament_select(population, fit, ga.tournament_size, rng)
            child_a, child_b = crossover(parent_a, parent_b, ga.crossover_prob, rng)
            next_pop.append(mutate(child_a, mut_p, rng))
            if len(next_pop) < ga.population_size:
                next_pop.append(mutate(child_b, mut_p, rng))
        population = np.array(next_pop, dtype=np.uint8)
        fit = evaluate(population)
        evaluations += ga.population_size
        best_per_gen.append(float(fit.max()))
        mean_per_gen.append(float(fit.mean()))

    best_idx = int(np.argmax(fit))
    best_genome = population[best_idx].copy()
    placement = decode(best_genome, bounds, ga.bits_per_coordinate)
    if fixed_irs is not None:
        placement = replace(placement, irs=(float(fixed_irs[0]), float(fixed_irs[1])))
    record = GaRunRecord(best_fitness=best_per_gen, mean_fitness=mean_per_gen,
                         best_genome=best_genome, evaluations=evaluations)
    return placement, record


def optimize_trajectory(trace, cfg: ScenarioConfig, master_seed: int, *,
                        irs: str = "mobile", access: str = "noma"
                        ) -> tuple[list[Placement], list[GaRunRecord]]:
    """Optimize every slot of a trace independently.

    irs selects the scenario family: "mobile" re-optimizes the vehicle
    every slot, "static" freezes it at the slot-1 joint optimum (or at the
    configured fixed point), "none" ignores the reflected link.  Each slot
    draws its own generator from the master seed, so the static variant's
    first slot reproduces the mobile variant's first slot exactly.
    """
    if irs not in ("mobile", "static", "none"):
        raise ValueError(f"unknown surface mode {irs!r}")
    placements: list[Placement] = []
    records: list[GaRunRecord] = []
    frozen = cfg.s_irs_position if irs == "static" else None
    warm: Optional[np.ndarray] = None
    prev: Optional[Placement] = None
    for slot in range(trace.num_slots):
        if irs == "mobile":
            mode, fixed = "m-irs", None
        elif irs == "none":
            mode, fixed = "no-irs", None
        elif frozen is None:  # static, first slot: joint optimization
            mode, fixed = "m-irs", None
        else:
            mode, fixed = "m-irs", frozen
        rng = scenario.stream(master_seed, scenario.GA_STREAM, _GA_KINDS[access], slot)
        placement, record = optimize_slot(
            trace.positions[slot], cfg, rng, irs_mode=mode, access=access,
            fixed_irs=fixed, warm_start_genome=warm if cfg.ga.warm_start else None,
            prev_placement=prev)
        if irs == "static" and frozen is None:
            frozen = placement.irs
        placements.append(placement)
        records.append(record)
        warm = record.best_genome
        prev = placement
    return placements, records
