"""Mean payoff games: operators, oracles, exact values, witnesses."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import product

import pytest

from troplf import (
    NEG_INF,
    AssumptionViolated,
    ExtendedNumber,
    MaxStrategy,
    MeanPayoffGame,
    MinStrategy,
    TropMatrix,
    brute_force_value,
    cycle_time_vector,
    dynamic_operator,
    feasibility_witness,
    game_at,
    game_value,
    game_value_and_strategy,
    homogenize,
    integer_oracle,
    residual_apply,
    trop_matvec,
    value_report,
    winning_oracle,
)
import troplf.game_engine as ge
from troplf.game_engine import play_outcome, restrict_max, restrict_min

from conftest import e, random_game, rows


def fin(x):
    return ExtendedNumber.finite(x)


def game(a, b) -> MeanPayoffGame:
    return MeanPayoffGame(TropMatrix(rows(a)), TropMatrix(rows(b)))


# --- validation ------------------------------------------------------------


def test_example2_game_valid(example2):
    H = homogenize(example2)
    g = game_at(H, 0)
    assert (g.m, g.n) == (8, 3)


def test_all_neg_inf_b_row_rejected():
    with pytest.raises(AssumptionViolated, match="row"):
        game([[0]], [["-inf"]])


def test_all_neg_inf_a_column_rejected():
    with pytest.raises(AssumptionViolated, match="column"):
        game([["-inf"]], [[0]])


# --- dynamic operator ------------------------------------------------------


def test_dynamic_operator_fixed_point():
    assert dynamic_operator(game([[0]], [[0]]), [fin(0)]) == (fin(0),)


def test_dynamic_operator_single_turn():
    assert dynamic_operator(game([[2]], [[5]]), [fin(0)]) == (fin(3),)


def test_dynamic_operator_composition_isotone_homogeneous():
    rng = random.Random(31)
    for _ in range(100):
        g = random_game(rng, 2, 2, 5, 0.3)
        x = [fin(rng.randint(-5, 5)) for _ in range(2)]
        assert dynamic_operator(g, x) == residual_apply(g.A, trop_matvec(g.B, x))
        lam = Fraction(rng.randint(-3, 3))
        shifted = dynamic_operator(g, [fin(v.value + lam) for v in x])
        fx = dynamic_operator(g, x)
        assert shifted == tuple(
            fin(v.value + lam) if v.is_finite else v for v in fx
        )
        y = [fin(v.value + rng.randint(0, 3)) for v in x]
        fy = dynamic_operator(g, y)
        assert all(a <= b for a, b in zip(fx, fy))


# --- strategy restriction --------------------------------------------------


def test_restrict_max_single():
    mat = restrict_max(game([[2]], [[5]]), MaxStrategy((0,)))
    assert mat.semiring == "min_plus"
    assert mat.entries[0][0] == fin(3)


def test_restrict_min_single():
    mat = restrict_min(game([[2]], [[5]]), MinStrategy((0,)))
    assert mat.semiring == "max_plus"
    assert mat.entries[0][0] == fin(3)


def test_restrict_max_rejects_forbidden_choice():
    with pytest.raises(ValueError):
        restrict_max(game([[2, 2]], [[5, "-inf"]]), MaxStrategy((1,)))


def test_example2_certificate_tau_cycle_time(example2):
    H = homogenize(example2)
    mat = restrict_min(game_at(H, 0), MinStrategy((7, 3, 3)))
    assert cycle_time_vector(mat, "max")[2] == fin(0)


# --- play outcomes and brute force -----------------------------------------


def test_play_outcome_single():
    assert play_outcome(game([[2]], [[5]]), 0, MinStrategy((0,)), MaxStrategy((0,))) == 3


def test_play_outcome_example2_zero_cycle(example2):
    H = homogenize(example2)
    g = game_at(H, 0)
    tau = MinStrategy((7, 3, 3))
    # Max row 8 (index 7) moves to node 3 (index 2), closing the zero cycle.
    sigma_choices = []
    for i in range(8):
        moves = g.max_moves(i)
        sigma_choices.append(2 if i == 7 and 2 in moves else moves[0])
    assert play_outcome(g, 2, tau, MaxStrategy(tuple(sigma_choices))) == 0


def test_determinacy_on_random_games():
    rng = random.Random(13)
    for _ in range(30):
        g = random_game(rng, 3, 3, 3, 0.4)
        mins = [g.min_moves(j) for j in range(g.n)]
        maxs = [g.max_moves(i) for i in range(g.m)]
        for j in range(g.n):
            lower = None
            for tc in product(*mins):
                worst = max(
                    play_outcome(g, j, MinStrategy(tc), MaxStrategy(sc))
                    for sc in product(*maxs)
                )
                lower = worst if lower is None else min(lower, worst)
            upper = None
            for sc in product(*maxs):
                guaranteed = min(
                    play_outcome(g, j, MinStrategy(tc), MaxStrategy(sc))
                    for tc in product(*mins)
                )
                upper = guaranteed if upper is None else max(upper, guaranteed)
            assert lower == upper == brute_force_value(g, j)


def test_brute_force_simple_cases():
    assert brute_force_value(game([[2]], [[5]]), 0) == 3
    zeros = [[0, 0], [0, 0]]
    assert brute_force_value(game(zeros, zeros), 0) == 0


# --- winning oracle --------------------------------------------------------


def test_winning_oracle_example2(example2):
    H = homogenize(example2)
    assert 2 in integer_oracle(game_at(H, 0)).winning
    assert 2 not in integer_oracle(game_at(H, -1)).winning


def test_winning_oracle_trivial_loss():
    rep = winning_oracle(game([[0]], [[-1]]))
    assert rep.winning == frozenset()
    assert rep.tau.choices == (0,)


def test_oracle_strategies_certify():
    """sigma keeps winning nodes nonnegative, tau keeps losing nodes negative."""
    rng = random.Random(41)
    for _ in range(40):
        g = random_game(rng, rng.randint(1, 4), rng.randint(1, 4), 4, 0.4)
        rep = winning_oracle(g)
        chi_sigma = cycle_time_vector(restrict_max(g, rep.sigma), "min")
        chi_tau = cycle_time_vector(restrict_min(g, rep.tau), "max")
        for j in range(g.n):
            if j in rep.winning:
                assert chi_sigma[j] >= fin(0)
            else:
                assert chi_tau[j] < fin(0)


def test_winning_set_matches_brute_force_sign():
    rng = random.Random(43)
    for _ in range(30):
        g = random_game(rng, 2, 2, 3, 0.3)
        rep = winning_oracle(g)
        for j in range(g.n):
            assert (j in rep.winning) == (brute_force_value(g, j) >= 0)


# --- exact values ----------------------------------------------------------


def test_game_value_example2_goldens(example2):
    H = homogenize(example2)
    assert game_value(game_at(H, 15), 2) == Fraction(11, 2)
    assert game_value(game_at(H, 1), 2) == Fraction(1, 2)


def test_game_value_matches_brute_force_random():
    rng = random.Random(47)
    for _ in range(60):
        g = random_game(rng, 3, 3, 5, 0.3)
        j = rng.randrange(3)
        assert game_value(g, j) == brute_force_value(g, j)


def test_game_value_strategy_attains_value():
    rng = random.Random(53)
    for _ in range(30):
        g = random_game(rng, 3, 3, 4, 0.3)
        j = rng.randrange(3)
        chi, sigma = game_value_and_strategy(g, j)
        assert cycle_time_vector(restrict_max(g, sigma), "min")[j] == fin(chi)


def test_value_report_consistency():
    rng = random.Random(59)
    for _ in range(20):
        g = random_game(rng, 2, 3, 3, 0.3)
        rep = value_report(g)
        for j in range(g.n):
            assert rep.chi[j] == brute_force_value(g, j)
        assert rep.winning == frozenset(j for j in range(g.n) if rep.chi[j] >= 0)


def test_rational_payments_prescaled():
    g = game([[Fraction(1, 2)]], [[Fraction(5, 3)]])
    assert game_value(g, 0) == Fraction(7, 6)


# --- duality sandwich ------------------------------------------------------


def test_duality_sandwich_small_games():
    rng = random.Random(61)
    for _ in range(25):
        g = random_game(rng, rng.randint(1, 3), rng.randint(1, 3), 2, 0.4)
        for j in range(g.n):
            val = brute_force_value(g, j)
            best_sigma = max(
                cycle_time_vector(restrict_max(g, MaxStrategy(sc)), "min")[j]
                for sc in product(*[g.max_moves(i) for i in range(g.m)])
            )
            best_tau = min(
                cycle_time_vector(restrict_min(g, MinStrategy(tc)), "max")[j]
                for tc in product(*[g.min_moves(jj) for jj in range(g.n)])
            )
            assert best_sigma == fin(val) == best_tau


# --- vectorized lifting backend -------------------------------------------


def test_vectorized_and_worklist_liftings_agree():
    rng = random.Random(67)
    saved = ge.VECTOR_LIFT_THRESHOLD
    try:
        for _ in range(30):
            g = random_game(rng, rng.randint(2, 6), rng.randint(2, 6), 6, 0.4)
            ge.VECTOR_LIFT_THRESHOLD = 10**9
            rep_work = winning_oracle(g)
            ge.VECTOR_LIFT_THRESHOLD = 1
            rep_vec = winning_oracle(g)
            assert rep_work.winning == rep_vec.winning
            assert rep_work.winning_max == rep_vec.winning_max
            for rep in (rep_work, rep_vec):
                chi_sigma = cycle_time_vector(restrict_max(g, rep.sigma), "min")
                chi_tau = cycle_time_vector(restrict_min(g, rep.tau), "max")
                for j in range(g.n):
                    if j in rep.winning:
                        assert chi_sigma[j] >= fin(0)
                    else:
                        assert chi_tau[j] < fin(0)
    finally:
        ge.VECTOR_LIFT_THRESHOLD = saved


# --- feasibility witnesses -------------------------------------------------


def test_feasibility_witness_example2(example2):
    H = homogenize(example2)
    g = game_at(H, 0)
    x = feasibility_witness(g, 2)
    assert x is not None and x[2].is_finite
    assert all(a <= b for a, b in zip(trop_matvec(g.A, x), trop_matvec(g.B, x)))
    known_y = (fin(-2), fin(2), fin(0))
    assert all(
        a <= b for a, b in zip(trop_matvec(g.A, known_y), trop_matvec(g.B, known_y))
    )


def test_feasibility_witness_losing_node():
    assert feasibility_witness(game([[0]], [[-1]]), 0) is None


def test_feasibility_witness_random():
    rng = random.Random(71)
    for _ in range(40):
        g = random_game(rng, 3, 3, 4, 0.4)
        for j in range(g.n):
            x = feasibility_witness(g, j)
            if brute_force_value(g, j) >= 0:
                assert x is not None
                assert x[j] == fin(0)
                assert all(
                    a <= b for a, b in zip(trop_matvec(g.A, x), trop_matvec(g.B, x))
                )
            else:
                assert x is None
