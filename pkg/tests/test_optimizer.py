import math

import numpy as np
import pytest

from mirsim import channel, mobility, noma, optimizer, scenario
from mirsim.channel import Placement

from testutil import make_config, small_config


def _ga_rng(seed=0, slot=0):
    return scenario.stream(seed, scenario.GA_STREAM, 0, slot)


def test_encode_bounds_map_to_all_zero_and_all_one():
    cfg = make_config(bits_per_coordinate=8)
    bounds = optimizer.genome_bounds(cfg)
    lows = Placement(uav=(0.0, 0.0, 100.0), irs=(0.0, 0.0))
    highs = Placement(uav=(500.0, 500.0, 300.0), irs=(500.0, 500.0))
    assert np.all(optimizer.encode(lows, bounds, 8) == 0)
    assert np.all(optimizer.encode(highs, bounds, 8) == 1)


def test_encode_midpoint_quantizes_to_128():
    cfg = make_config(bits_per_coordinate=8)
    bounds = optimizer.genome_bounds(cfg)
    mid = Placement(uav=(250.0, 250.0, 200.0), irs=(250.0, 250.0))
    genome = optimizer.encode(mid, bounds, 8)
    for c in range(optimizer.NUM_COORDS):
        code = int("".join(str(b) for b in genome[c * 8:(c + 1) * 8]), 2)
        assert code == 128


def test_decode_extremes():
    cfg = make_config(bits_per_coordinate=6)
    bounds = optimizer.genome_bounds(cfg)
    length = optimizer.genome_length(cfg)
    low = optimizer.decode(np.zeros(length, dtype=np.uint8), bounds, 6)
    high = optimizer.decode(np.ones(length, dtype=np.uint8), bounds, 6)
    assert low.uav == (0.0, 0.0, 100.0) and low.irs == (0.0, 0.0)
    assert high.uav == (500.0, 500.0, 300.0) and high.irs == (500.0, 500.0)


def test_round_trip_error_within_quantization_bound():
    cfg = make_config(bits_per_coordinate=12)
    bounds = optimizer.genome_bounds(cfg)
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        placement = Placement(
            uav=(rng.uniform(0, 500), rng.uniform(0, 500), rng.uniform(100, 300)),
            irs=(rng.uniform(0, 500), rng.uniform(0, 500)))
        decoded = optimizer.decode(optimizer.encode(placement, bounds, 12), bounds, 12)
        values = [*placement.uav, *placement.irs]
        back = [*decoded.uav, *decoded.irs]
        for v, w, (lo, hi) in zip(values, back, bounds):
            err = abs(v - w) / ((hi - lo) / (2 ** 12 - 1))
            worst = max(worst, err)
    assert worst <= 0.5 + 1e-9


def test_encode_and_decode_reject_bad_input():
    cfg = make_config(bits_per_coordinate=6)
    bounds = optimizer.genome_bounds(cfg)
    with pytest.raises(ValueError, match="outside"):
        optimizer.encode(Placement(uav=(0.0, 0.0, 50.0), irs=(0.0, 0.0)), bounds, 6)
    with pytest.raises(ValueError, match="length"):
        optimizer.decode(np.zeros(7, dtype=np.uint8), bounds, 6)


def test_fitness_equals_sum_rate_when_feasible():
    cfg = make_config(snr_threshold_db=-200.0, num_users=4, bits_per_coordinate=8)
    bounds = optimizer.genome_bounds(cfg)
    users = np.array([[30.0, 30.0], [60.0, 10.0], [200.0, 300.0], [400.0, 100.0]])
    genome = optimizer.encode(Placement(uav=(100.0, 100.0, 100.0), irs=(50.0, 50.0)),
                              bounds, 8)
    fit = optimizer.fitness(genome, users, cfg)
    result = noma.slot_sum_rate(optimizer.decode(genome, bounds, 8), users, cfg)
    assert fit == result.sum_rate


def test_fitness_boundary_threshold_costs_nothing():
    cfg = make_config(num_users=4, bits_per_coordinate=8)
    bounds = optimizer.genome_bounds(cfg)
    users = np.array([[30.0, 30.0], [60.0, 10.0], [200.0, 300.0], [400.0, 100.0]])
    genome = optimizer.encode(Placement(uav=(100.0, 100.0, 100.0), irs=(50.0, 50.0)),
                              bounds, 8)
    result = noma.slot_sum_rate(optimizer.decode(genome, bounds, 8), users, cfg)
    at_boundary = make_config(
        num_users=4, bits_per_coordinate=8,
        snr_threshold_db=float(scenario.linear_to_db(result.sinr.min())))
    fit = optimizer.fitness(genome, users, at_boundary)
    assert math.isclose(fit, result.sum_rate, abs_tol=1e-9)


def test_fitness_respects_sinr_dominance():
    cfg = make_config(num_users=1, bits_per_coordinate=10)
    bounds = optimizer.genome_bounds(cfg)
    users = np.array([[250.0, 250.0]])
    near = optimizer.encode(Placement(uav=(250.0, 250.0, 100.0), irs=(250.0, 250.0)),
                            bounds, 10)
    far = optimizer.encode(Placement(uav=(0.0, 0.0, 300.0), irs=(0.0, 0.0)),
                           bounds, 10)
    assert optimizer.fitness(near, users, cfg) >= optimizer.fitness(far, users, cfg)


def test_full_tournament_returns_global_best():
    rng = _ga_rng(0)
    population = np.eye(4, dtype=np.uint8)
    fitnesses = np.array([0.3, 2.0, 1.0, -1.0])
    for _ in range(20):
        winner = optimizer.tournament_select(population, fitnesses, 4, rng)
        assert np.array_equal(winner, population[1])


def test_two_candidate_tournament_always_picks_the_fitter():
    rng = _ga_rng(1)
    population = np.array([[0, 0], [1, 1]], dtype=np.uint8)
    fitnesses = np.array([1.0, 2.0])
    for _ in range(50):
        assert np.array_equal(
            optimizer.tournament_select(population, fitnesses, 2, rng),
            population[1])


def test_tournament_ties_break_to_lowest_index():
    rng = _ga_rng(2)
    population = np.array([[0, 0], [0, 1], [1, 1]], dtype=np.uint8)
    fitnesses = np.array([5.0, 5.0, 5.0])
    for _ in range(20):
        assert np.array_equal(
            optimizer.tournament_select(population, fitnesses, 3, rng),
            population[0])


def test_tournament_rejects_empty_population():
    with pytest.raises(ValueError):
        optimizer.tournament_select(np.empty((0, 4)), np.empty(0), 1, _ga_rng())


def test_size_one_tournament_returns_a_member():
    rng = _ga_rng(3)
    population = np.array([[0, 0], [1, 1]], dtype=np.uint8)
    fitnesses = np.array([1.0, 2.0])
    winner = optimizer.tournament_select(population, fitnesses, 1, rng)
    assert any(np.array_equal(winner, row) for row in population)


class _ScriptedRng:
    """Deterministic stand-in driving crossover to a chosen cut point."""

    def __init__(self, cut):
        self.cut = cut

    def random(self):
        return 0.0

    def integers(self, low, high):
        return self.cut


def test_crossover_swaps_suffixes_at_the_cut():
    a = np.array([0, 0, 0, 0], dtype=np.uint8)
    b = np.array([1, 1, 1, 1], dtype=np.uint8)
    child_a, child_b = optimizer.crossover(a, b, 1.0, _ScriptedRng(2))
    assert child_a.tolist() == [0, 0, 1, 1]
    assert child_b.tolist() == [1, 1, 0, 0]


def test_crossover_identity_cases():
    rng = _ga_rng(4)
    a = np.array([0, 1, 0, 1], dtype=np.uint8)
    b = a.copy()
    child_a, child_b = optimizer.crossover(a, b, 1.0, rng)
    assert np.array_equal(child_a, a) and np.array_equal(child_b, a)
    c = np.array([1, 1, 0, 0], dtype=np.uint8)
    child_a, child_b = optimizer.crossover(a, c, 0.0, rng)
    assert np.array_equal(child_a, a) and np.array_equal(child_b, c)
    with pytest.raises(ValueError):
        optimizer.crossover(a, np.zeros(5, dtype=np.uint8), 1.0, rng)


def test_mutation_extremes():
    rng = _ga_rng(5)
    genome = np.array([0, 1, 1, 0, 1], dtype=np.uint8)
    assert np.array_equal(optimizer.mutate(genome, 0.0, rng), genome)
    assert np.array_equal(optimizer.mutate(genome, 1.0, rng), 1 - genome)


def test_mutation_flip_rate_statistics():
    rng = _ga_rng(6)
    genome = np.zeros(200, dtype=np.uint8)
    flips = sum(int(optimizer.mutate(genome, 0.01, rng).sum()) for _ in range(10_000))
    mean = flips / 10_000
    sigma = math.sqrt(200 * 0.01 * 0.99 / 10_000)
    assert abs(mean - 2.0) <= 3.0 * sigma


def test_closed_population_returns_the_seed_genome():
    cfg = small_config(mutation_prob_per_bit=0.0, population_size=6, max_iterations=4)
    users = np.array([[10.0, 10.0], [40.0, 30.0], [90.0, 60.0], [250.0, 250.0]])
    bounds = optimizer.genome_bounds(cfg)
    genome = optimizer.encode(Placement(uav=(120.0, 80.0, 150.0), irs=(100.0, 100.0)),
                              bounds, cfg.ga.bits_per_coordinate)
    seeded = np.tile(genome, (cfg.ga.population_size, 1))
    placement, record = optimizer.optimize_slot(users, cfg, _ga_rng(7),
                                                initial_population=seeded)
    expected = optimizer.decode(genome, bounds, cfg.ga.bits_per_coordinate)
    assert placement == expected
    assert record.best_fitness[0] == record.best_fitness[-1]
    assert np.array_equal(record.best_genome, genome)


def test_optimize_slot_is_deterministic():
    cfg = small_config()
    users = np.array([[10.0, 10.0], [40.0, 30.0], [90.0, 60.0], [250.0, 250.0]])
    a = optimizer.optimize_slot(users, cfg, _ga_rng(8))
    b = optimizer.optimize_slot(users, cfg, _ga_rng(8))
    assert a[0] == b[0]
    assert a[1].best_fitness == b[1].best_fitness
    assert np.array_equal(a[1].best_genome, b[1].best_genome)


def test_elitism_keeps_best_fitness_monotone():
    cfg = small_config(max_iterations=12)
    users = np.array([[10.0, 10.0], [40.0, 30.0], [90.0, 60.0], [250.0, 250.0]])
    _, record = optimizer.optimize_slot(users, cfg, _ga_rng(9))
    best = record.best_fitness
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))
    assert best[-1] >= best[0]
    assert record.evaluations == cfg.ga.population_size * (cfg.ga.max_iterations + 1)


def test_optimized_placements_respect_bounds():
    cfg = small_config()
    users = np.array([[10.0, 10.0], [40.0, 30.0], [90.0, 60.0], [250.0, 250.0]])
    for seed in range(3):
        placement, _ = optimizer.optimize_slot(users, cfg, _ga_rng(seed))
        channel.validate_placement(placement, cfg)


def test_initial_population_shape_is_checked():
    cfg = small_config()
    users = np.array([[10.0, 10.0], [40.0, 30.0]])
    with pytest.raises(ValueError, match="initial_population"):
        optimizer.optimize_slot(users, cfg, _ga_rng(),
                                initial_population=np.zeros((3, 4), dtype=np.uint8))


def test_trajectory_lengths_follow_the_trace():
    cfg = small_config(num_slots=1)
    trace = mobility.generate_trace(cfg, scenario.stream(1, scenario.MOBILITY_STREAM))
    placements, records = optimizer.optimize_trajectory(trace, cfg, 1)
    assert len(placements) == len(records) == 1

    cfg5 = small_config(num_slots=5)
    trace5 = mobility.generate_trace(cfg5, scenario.stream(1, scenario.MOBILITY_STREAM))
    placements, _ = optimizer.optimize_trajectory(trace5, cfg5, 1)
    assert len(placements) == 5
    for p in placements:
        channel.validate_placement(p, cfg5)


def test_static_mode_freezes_the_surface():
    cfg = small_config(num_slots=4)
    trace = mobility.generate_trace(cfg, scenario.stream(2, scenario.MOBILITY_STREAM))
    placements, _ = optimizer.optimize_trajectory(trace, cfg, 2, irs="static")
    first = placements[0].irs
    assert all(p.irs == first for p in placements)

    pinned = small_config(num_slots=3, s_irs_x=222.0, s_irs_y=111.0)
    trace = mobility.generate_trace(pinned, scenario.stream(2, scenario.MOBILITY_STREAM))
    placements, _ = optimizer.optimize_trajectory(trace, pinned, 2, irs="static")
    assert all(p.irs == (222.0, 111.0) for p in placements)


def test_static_first_slot_equals_joint_first_slot():
    cfg = small_config(num_slots=2)
    trace = mobility.generate_trace(cfg, scenario.stream(3, scenario.MOBILITY_STREAM))
    mobile, _ = optimizer.optimize_trajectory(trace, cfg, 3, irs="mobile")
    static, _ = optimizer.optimize_trajectory(trace, cfg, 3, irs="static")
    assert mobile[0] == static[0]


def test_no_surface_equals_dead_reflection():
    cfg = small_config(num_slots=3)
    dead = small_config(num_slots=3, irs_reflection_coeff=0.0)
    trace = mobility.generate_trace(cfg, scenario.stream(4, scenario.MOBILITY_STREAM))
    none_run, none_records = optimizer.optimize_trajectory(trace, cfg, 4, irs="none")
    dead_run, dead_records = optimizer.optimize_trajectory(trace, dead, 4, irs="mobile")
    for a, b in zip(none_run, dead_run):
        assert a == b
    for ra, rb in zip(none_records, dead_records):
        assert ra.best_fitness == rb.best_fitness


def test_unknown_surface_mode_rejected():
    cfg = small_config()
    trace = mobility.generate_trace(cfg, scenario.stream(1, scenario.MOBILITY_STREAM))
    with pytest.raises(ValueError, match="surface mode"):
        optimizer.optimize_trajectory(trace, cfg, 1, irs="hovering")


def test_displacement_limit_penalizes_long_hops():
    users = np.array([[250.0, 250.0]])
    cfg = small_config(num_users=1, max_slot_displacement_m=50.0)
    prev = Placement(uav=(0.0, 0.0, 100.0), irs=(0.0, 0.0))
    bounds = optimizer.genome_bounds(cfg)
    bits = cfg.ga.bits_per_coordinate
    genome = optimizer.encode(Placement(uav=(250.0, 250.0, 100.0), irs=(250.0, 250.0)),
                              bounds, bits)
    unconstrained = optimizer.fitness(genome, users, cfg)
    constrained = optimizer.fitness(genome, users, cfg, prev_placement=prev)
    assert constrained < unconstrained
