import math

import numpy as np
import pytest

from modelfuzz.errors import InsufficientDataError
from modelfuzz.fusion import (
    WEIGHT_FLOOR,
    JudgeMatrix,
    MeasurementRecord,
    OperatorWeightTable,
    critic_weights,
    delta_fitness,
    fitness,
    fusion_report,
    pearson,
    update_operator_weights,
)

# --- independent step-by-step oracle (plain Python, no shared code) --------


def oracle_steps(rows):
    """Literal transcription of the fusion steps over (perf, variety, time) rows."""
    cols = [[r[q] for r in rows] for q in range(3)]
    cols[2] = [1.0 / t for t in cols[2]]

    def l2(col):
        n = math.sqrt(sum(v * v for v in col))
        return [v / n if n else 0.0 for v in col]

    z = [l2(c) for c in cols]

    def std(col):
        m = len(col)
        mean = sum(col) / m
        return math.sqrt(sum((v - mean) ** 2 for v in col) / (m - 1))

    def corr(a, b):
        ma, mb = sum(a) / len(a), sum(b) / len(b)
        num = sum((x - ma) * (y - mb) for x, y in zip(a, b))
        den = math.sqrt(sum((x - ma) ** 2 for x in a) * sum((y - mb) ** 2 for y in b))
        return 0.0 if den == 0 else num / den

    sigma = [std(c) for c in z]
    conflict = [sum(1.0 - corr(z[q], z[o]) for o in range(3) if o != q) for q in range(3)]
    cap = [s * f for s, f in zip(sigma, conflict)]
    total = sum(cap)
    weights = [c / total for c in cap] if total else [1 / 3] * 3
    fitness_rows = [sum(weights[q] * z[q][p] for q in range(3)) for p in range(len(rows))]
    return weights, fitness_rows


def matrix_from_rows(rows):
    matrix = JudgeMatrix()
    for idx, (perf, variety, secs) in enumerate(rows):
        matrix.append(MeasurementRecord(f"m{idx}", perf, int(variety), secs))
    return matrix


FIXTURE_ROWS = [(0.1, 2, 1.0), (0.2, 4, 2.0), (0.4, 8, 4.0)]
# Frozen from oracle_steps(FIXTURE_ROWS); the perf and variety columns are
# proportional (r = 1) while reciprocal time runs opposite, which pins the
# weights at clean fractions.
FIXTURE_WEIGHTS = (0.25, 0.25, 0.5)
FIXTURE_FITNESS = (0.5455447255899809, 0.4364357804719847, 0.5455447255899809)


class TestPearson:
    def test_perfect_positive(self):
        assert pearson([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0, abs=1e-12)

    def test_perfect_negative(self):
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)

    def test_hand_computed_value(self):
        # formula by hand: r = 1 / (sqrt(2) * sqrt(2/3)) = sqrt(3)/2
        assert pearson([1, 2, 3], [1, 2, 2]) == pytest.approx(0.8660254037844387, abs=1e-9)

    def test_constant_input_returns_zero(self):
        assert pearson([5, 5, 5], [1, 2, 3]) == 0.0
        assert pearson([1, 2, 3], [7, 7, 7]) == 0.0

    def test_symmetry_and_bounds(self, rng):
        for _ in range(200):
            x = rng.normal(size=8)
            y = rng.normal(size=8)
            r = pearson(x, y)
            assert r == pytest.approx(pearson(y, x), abs=1e-14)
            assert abs(r) <= 1 + 1e-12

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            pearson([1, 2], [1, 2, 3])
        with pytest.raises(ValueError):
            pearson([1], [1])


class TestCriticWeights:
    def test_fixture_matches_independent_oracle(self):
        matrix = matrix_from_rows(FIXTURE_ROWS)
        got = critic_weights(matrix)
        expect, _ = oracle_steps(FIXTURE_ROWS)
        for g, e, frozen in zip(got, expect, FIXTURE_WEIGHTS):
            assert g == pytest.approx(e, abs=1e-9)
            assert g == pytest.approx(frozen, abs=1e-9)

    def test_constant_variety_column_gets_zero_weight(self):
        # performance and reciprocal time vary identically; variety is flat
        rows = [(0.1, 3, 10.0), (0.2, 3, 5.0), (0.4, 3, 2.5)]
        w_perf, w_var, w_time = critic_weights(matrix_from_rows(rows))
        assert w_var == pytest.approx(0.0, abs=1e-12)
        assert w_perf == pytest.approx(0.5, abs=1e-9)
        assert w_time == pytest.approx(0.5, abs=1e-9)

    def test_all_identical_rows_fall_back_to_uniform(self):
        rows = [(1.0, 1, 1.0), (1.0, 1, 1.0)]
        assert critic_weights(matrix_from_rows(rows)) == pytest.approx((1 / 3,) * 3)

    def test_insufficient_rows(self):
        with pytest.raises(InsufficientDataError):
            critic_weights(matrix_from_rows([(1.0, 1, 1.0)]))

    def test_random_matrices_sum_to_one(self, rng):
        for _ in range(300):
            m = int(rng.integers(2, 40))
            rows = [
                (float(rng.uniform(0, 5)), int(rng.integers(0, 30)), float(rng.uniform(0.01, 9)))
                for _ in range(m)
            ]
            weights = critic_weights(matrix_from_rows(rows))
            assert all(w >= 0 for w in weights)
            assert sum(weights) == pytest.approx(1.0, abs=1e-9)


class TestFitness:
    def test_fixture_fitness_frozen_values(self):
        matrix = matrix_from_rows(FIXTURE_ROWS)
        _, fit_rows = oracle_steps(FIXTURE_ROWS)
        for idx, frozen in enumerate(FIXTURE_FITNESS):
            assert fitness(matrix, idx) == pytest.approx(fit_rows[idx], abs=1e-12)
            assert fitness(matrix, idx) == pytest.approx(frozen, abs=1e-9)

    def test_identical_rows_have_identical_fitness(self):
        rows = [(2.0, 4, 0.5)] * 4
        matrix = matrix_from_rows(rows)
        values = {fitness(matrix, i) for i in range(4)}
        assert len(values) == 1

    def test_dominating_row_wins(self):
        # row 0 beats row 1 on every measurement (time smaller)
        rows = [(0.5, 6, 1.0), (0.2, 3, 2.0), (0.9, 4, 1.7)]
        matrix = matrix_from_rows(rows)
        _, fit_rows = oracle_steps(rows)
        assert fitness(matrix, 0) > fitness(matrix, 1)
        assert fitness(matrix, 0) == pytest.approx(fit_rows[0], abs=1e-12)

    def test_scale_invariance_of_performance_column(self):
        rows = [(0.5, 6, 1.0), (0.2, 3, 2.0), (0.9, 4, 1.7)]
        scaled = [(p * 7, v, t) for p, v, t in rows]
        a = matrix_from_rows(rows)
        b = matrix_from_rows(scaled)
        for i in range(3):
            assert fitness(a, i) == pytest.approx(fitness(b, i), abs=1e-9)

    def test_ranking_invariant_under_column_rescaling(self, rng):
        for _ in range(100):
            m = int(rng.integers(3, 20))
            rows = [
                (float(rng.uniform(0.01, 5)), int(rng.integers(0, 30)), float(rng.uniform(0.01, 9)))
                for _ in range(m)
            ]
            scaled = [(p * 7, v, t) for p, v, t in rows]
            a = matrix_from_rows(rows)
            b = matrix_from_rows(scaled)
            rank_a = np.argsort([fitness(a, i) for i in range(m)], kind="stable")
            rank_b = np.argsort([fitness(b, i) for i in range(m)], kind="stable")
            assert np.array_equal(rank_a, rank_b)

    def test_smallest_time_wins_when_other_columns_flat(self):
        rows = [(1.0, 5, 3.0), (1.0, 5, 1.0), (1.0, 5, 2.0)]
        matrix = matrix_from_rows(rows)
        values = [fitness(matrix, i) for i in range(3)]
        assert values[1] == max(values)

    def test_single_row_cold_start(self):
        matrix = matrix_from_rows([(1.0, 1, 1.0)])
        assert fitness(matrix, 0) == 0.0

    def test_invalid_row_index(self):
        matrix = matrix_from_rows(FIXTURE_ROWS)
        with pytest.raises(ValueError):
            fitness(matrix, 3)

    def test_raw_x_flag_changes_scale_not_direction(self):
        rows = [(0.5, 6, 1.0), (0.2, 3, 2.0), (0.9, 4, 1.7)]
        matrix = matrix_from_rows(rows)
        assert fitness(matrix, 0, raw_x=True) > fitness(matrix, 1, raw_x=True)


class TestDeltaFitness:
    def test_self_difference_is_zero(self):
        matrix = matrix_from_rows(FIXTURE_ROWS)
        assert delta_fitness(matrix, 1, 1) == 0.0

    def test_identical_measurements_give_zero(self):
        rows = [(0.2, 3, 1.0), (0.2, 3, 1.0), (0.5, 9, 0.25)]
        matrix = matrix_from_rows(rows)
        assert delta_fitness(matrix, 0, 1) == pytest.approx(0.0, abs=1e-15)

    def test_dominating_mutant_positive(self):
        rows = [(0.2, 3, 2.0), (0.5, 6, 1.0), (0.3, 4, 1.5)]
        matrix = matrix_from_rows(rows)
        assert delta_fitness(matrix, 1, 0) > 0

    def test_report_carries_delta(self):
        matrix = matrix_from_rows(FIXTURE_ROWS)
        report = fusion_report(matrix, 1, 0)
        assert report.delta_fitness == pytest.approx(
            fitness(matrix, 1) - fitness(matrix, 0), abs=1e-15
        )
        assert sum(report.column_weights) == pytest.approx(1.0, abs=1e-9)


class TestOperatorWeights:
    def test_additive_update(self):
        table = OperatorWeightTable.uniform()
        updated = update_operator_weights(table, "ReLU", 0.3)
        assert updated.as_dict["ReLU"] == pytest.approx(1.3)
        assert table.as_dict["ReLU"] == 1.0  # input untouched

    def test_floor_applies(self):
        table = OperatorWeightTable.uniform()
        floored = update_operator_weights(table, "Conv2D", -5.0)
        assert floored.as_dict["Conv2D"] == WEIGHT_FLOOR

    def test_zero_delta_is_identity(self):
        table = OperatorWeightTable.uniform()
        assert update_operator_weights(table, "Tanh", 0.0).as_dict == table.as_dict

    def test_unknown_tag_rejected(self):
        with pytest.raises(ValueError):
            update_operator_weights(OperatorWeightTable.uniform(), "Gemm", 0.1)

    def test_other_entries_unchanged(self):
        table = OperatorWeightTable.uniform()
        updated = update_operator_weights(table, "ReLU", 2.0)
        for tag, value in updated.as_dict.items():
            if tag != "ReLU":
                assert value == 1.0

    def test_sampler_respects_probabilities(self, rng):
        table = OperatorWeightTable.uniform()
        for tag in ("None", "Conv2D"):
            assert tag in dict(table.weights)
        tags, probs = table.probabilities()
        assert sum(probs) == pytest.approx(1.0)
        draws = [table.sample(rng) for _ in range(500)]
        assert set(draws) <= set(tags)
