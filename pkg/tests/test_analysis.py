"""CHSH arrangements, residuals, membership proofs, and classification."""

import math
import random
from fractions import Fraction

import pytest

from bellbox import (
    Classification,
    Context,
    DeterministicStrategy,
    LocalDecomposition,
    MembershipError,
    QuantumDirections,
    ScenarioShapeError,
    chsh_arrangements,
    chsh_max,
    chsh_value,
    classify,
    enumerate_strategies,
    exact_behavior,
    local_membership,
    mix,
    nosignaling_residual,
    singlet_behavior,
    singlet_optimal_directions,
    socks_color,
    socks_off,
    socks_on,
    strategy_behavior,
)
from _oracles import chsh_by_enumeration
from _tables import (
    SOCKS_COLOR_TABLE,
    SOCKS_ON_TABLE,
    STANDARD_SCENARIO,
    UNIFORM_TABLE,
    behavior_from,
)

F = Fraction


def _pr_box():
    """Extremal no-signaling table: outcomes agree except when both settings are second."""
    h = F(1, 2)
    z = F(0)
    agree = ((h, z), (z, h))
    disagree = ((z, h), (h, z))
    return behavior_from(
        STANDARD_SCENARIO,
        {(0, 0): agree, (0, 1): agree, (1, 0): agree, (1, 1): disagree},
    )


class TestArrangements:
    def test_eight_admissible(self):
        arrangements = chsh_arrangements()
        assert len(arrangements) == 8
        assert len(set(arrangements)) == 8
        for arr in arrangements:
            assert sum(1 for s in arr if s < 0) % 2 == 1

    def test_standard_combination_first(self):
        assert chsh_arrangements()[0] == (1, 1, 1, -1)


class TestChshValue:
    def test_socks_on_standard(self):
        b = behavior_from(STANDARD_SCENARIO, SOCKS_ON_TABLE)
        assert chsh_value(b, (1, 1, 1, -1)) == 2

    def test_socks_off_standard(self):
        b = exact_behavior(socks_off())
        assert chsh_value(b, (1, 1, 1, -1)) == 4

    def test_uniform_all_zero(self):
        b = behavior_from(STANDARD_SCENARIO, UNIFORM_TABLE)
        assert all(chsh_value(b, arr) == 0 for arr in chsh_arrangements())

    def test_wrong_shape_rejected(self):
        from bellbox import Behavior, Scenario

        scenario = Scenario.binary(("A",), ("B",))
        b = Behavior(
            scenario, {Context(0, 0): ((F(1, 2), F(0)), (F(0), F(1, 2)))}
        )
        with pytest.raises(ScenarioShapeError) as exc:
            chsh_value(b, (1, 1, 1, -1))
        assert exc.value.code == "SCENARIO_SHAPE"


class TestChshMax:
    def test_socks_on(self):
        value, arrangement = chsh_max(behavior_from(STANDARD_SCENARIO, SOCKS_ON_TABLE))
        assert value == 2
        assert arrangement == (1, 1, 1, -1)

    def test_socks_off(self):
        value, _ = chsh_max(exact_behavior(socks_off()))
        assert value == 4

    def test_singlet_optimal(self):
        value, _ = chsh_max(singlet_behavior(singlet_optimal_directions()))
        assert value == pytest.approx(2 * math.sqrt(2), abs=1e-9)

    def test_agrees_with_enumeration_oracle(self):
        rand = random.Random(55)
        for _ in range(100):
            b = _random_rational_behavior(rand)
            table = {
                (ctx.alice, ctx.bob): b.table[ctx] for ctx in b.scenario.contexts()
            }
            value, _ = chsh_max(b)
            assert value == chsh_by_enumeration(table)


class TestResidual:
    def test_socks_off_exactly_zero(self):
        residual = nosignaling_residual(exact_behavior(socks_off()))
        assert residual == 0 and isinstance(residual, Fraction)

    def test_socks_color_exactly_half(self):
        assert nosignaling_residual(exact_behavior(socks_color())) == F(1, 2)

    def test_product_behavior_zero(self):
        p, q = (F(2, 7), F(5, 7)), (F(3, 11), F(8, 11))
        table = {
            key: tuple(tuple(pa * qb for qb in q) for pa in p) for key in UNIFORM_TABLE
        }
        assert nosignaling_residual(behavior_from(STANDARD_SCENARIO, table)) == 0

    def test_frozen_color_table_value(self):
        assert (
            nosignaling_residual(behavior_from_color())
            == F(1, 2)
        )


def behavior_from_color():
    from _tables import COLOR_SCENARIO

    return behavior_from(COLOR_SCENARIO, SOCKS_COLOR_TABLE)


class TestMembership:
    def test_socks_on_feasible_and_exactly_reconstructed(self):
        b = behavior_from(STANDARD_SCENARIO, SOCKS_ON_TABLE)
        result = local_membership(b)
        assert result.feasible
        assert result.snap_error == 0
        reconstructed = result.decomposition.to_behavior()
        assert reconstructed == b

    def test_socks_on_quarter_weight_decomposition_is_valid(self):
        # The four hidden states of the wearing-socks model induce four
        # deterministic strategies; equal weights reproduce the table.
        strategies = (
            DeterministicStrategy((1, 1), (1, 2)),
            DeterministicStrategy((1, 2), (1, 1)),
            DeterministicStrategy((2, 1), (2, 2)),
            DeterministicStrategy((2, 2), (2, 1)),
        )
        deco = LocalDecomposition(
            STANDARD_SCENARIO, tuple((s, F(1, 4)) for s in strategies)
        )
        assert deco.to_behavior() == behavior_from(STANDARD_SCENARIO, SOCKS_ON_TABLE)

    def test_socks_off_infeasible_with_verified_certificate(self):
        b = exact_behavior(socks_off())
        result = local_membership(b)
        assert not result.feasible
        cert = result.certificate
        assert cert.verify(b)
        assert cert.behavior_value > cert.local_bound
        value, _ = chsh_max(b)
        assert value == 4  # cross-check: the bound is breached

    def test_deterministic_point_behavior_single_strategy(self):
        strategy = DeterministicStrategy((1, 2), (2, 1))
        b = strategy_behavior(STANDARD_SCENARIO, strategy)
        result = local_membership(b)
        assert result.feasible
        assert result.decomposition.weights == ((strategy, F(1)),)

    def test_pr_box_infeasible(self):
        result = local_membership(_pr_box())
        assert not result.feasible

    def test_pr_mixtures_straddle_boundary(self):
        pr = _pr_box()
        uniform = behavior_from(STANDARD_SCENARIO, UNIFORM_TABLE)
        for q, expected_feasible in ((F(1, 4), True), (F(1, 2), True), (F(3, 4), False)):
            b = mix([(q, pr), (1 - q, uniform)])
            result = local_membership(b)
            assert result.feasible == expected_feasible
            value, _ = chsh_max(b)
            assert value == 4 * q  # mixing with noise scales the violation

    def test_float_dyadic_table_has_zero_snap_error(self):
        table = {
            key: tuple(tuple(float(v) for v in row) for row in grid)
            for key, grid in SOCKS_ON_TABLE.items()
        }
        result = local_membership(behavior_from(STANDARD_SCENARIO, table))
        assert result.feasible
        assert result.snap_error == 0
        assert result.tested == behavior_from(STANDARD_SCENARIO, SOCKS_ON_TABLE)

    def test_float_singlet_snaps_tightly(self):
        b = singlet_behavior(singlet_optimal_directions())
        result = local_membership(b)
        assert not result.feasible
        assert result.snap_error < 1e-9
        assert result.certificate.verify(result.tested)

    def test_unnormalized_float_rejected(self):
        table = {
            key: tuple(tuple(float(v) for v in row) for row in grid)
            for key, grid in UNIFORM_TABLE.items()
        }
        table[(0, 0)] = ((0.2501, 0.25), (0.25, 0.25))
        from bellbox import Behavior

        b = Behavior(STANDARD_SCENARIO, {Context(x, y): g for (x, y), g in table.items()})
        with pytest.raises(MembershipError) as exc:
            local_membership(b)
        assert exc.value.code == "NUMERIC_INPUT_UNNORMALIZED"


class TestSoundnessPair:
    def test_canonical_instances(self):
        cases = [
            (exact_behavior(socks_on()), True),
            (exact_behavior(socks_off()), False),
            (exact_behavior(socks_color()), False),  # signaling lies outside too
            (_pr_box(), False),
        ]
        for behavior, expect_feasible in cases:
            result = local_membership(behavior)
            assert result.feasible == expect_feasible
            value, _ = chsh_max(behavior)
            if result.feasible:
                assert value <= 2
                assert result.decomposition.to_behavior() == behavior
            else:
                assert result.certificate.verify(behavior)
        singlet = singlet_behavior(singlet_optimal_directions())
        result = local_membership(singlet)
        assert not result.feasible
        value, _ = chsh_max(singlet)
        assert value > 2

    def test_feasibility_and_chsh_never_disagree(self):
        rand = random.Random(404)
        pr = _pr_box()
        checked_feasible = 0
        checked_infeasible = 0
        for i in range(1000):
            style = i % 3
            if style == 0:
                b = _random_local_mixture(rand)
            elif style == 1:
                q = F(rand.randint(0, 16), 16)
                b = mix([(q, pr), (1 - q, _random_local_mixture(rand))])
            else:
                b = _random_rational_behavior(rand)  # usually signaling
            result = local_membership(b)
            value, _ = chsh_max(b)
            if result.feasible:
                checked_feasible += 1
                assert value <= 2
                assert result.decomposition.to_behavior() == b
            else:
                checked_infeasible += 1
                assert result.certificate.verify(b)
        assert checked_feasible > 200 and checked_infeasible > 200


class TestClassify:
    def test_socks_on_local(self):
        report = classify(exact_behavior(socks_on()))
        assert report.classification is Classification.LOCAL
        assert report.chsh_max == 2
        assert report.nosignaling_residual == 0
        assert report.decomposition is not None
        assert report.decomposition.to_behavior() == exact_behavior(socks_on())

    def test_socks_off_nonlocal_nosignaling(self):
        report = classify(exact_behavior(socks_off()))
        assert report.classification is Classification.NONLOCAL_NOSIGNALING
        assert report.chsh_max == 4
        assert report.nosignaling_residual == 0
        assert report.certificate is not None

    def test_socks_color_signaling(self):
        report = classify(exact_behavior(socks_color()))
        assert report.classification is Classification.SIGNALING
        assert report.nosignaling_residual == F(1, 2)
        assert report.decomposition is None

    def test_singlet_nonlocal_nosignaling(self):
        report = classify(singlet_behavior(singlet_optimal_directions()))
        assert report.classification is Classification.NONLOCAL_NOSIGNALING
        assert report.chsh_max == pytest.approx(2 * math.sqrt(2), abs=1e-9)

    def test_depends_only_on_the_behavior(self):
        model = socks_on()
        via_model = exact_behavior(model)
        via_mixture = mix(
            [
                (c.weight, __import__("bellbox").condition_on_cause(model, c.id))
                for c in model.causes
            ]
        )
        assert via_model == via_mixture
        r1, r2 = classify(via_model), classify(via_mixture)
        assert (r1.classification, r1.chsh_max, r1.nosignaling_residual) == (
            r2.classification,
            r2.chsh_max,
            r2.nosignaling_residual,
        )


class TestTsirelsonGap:
    def test_quantum_tables_never_exceed_the_bound(self):
        rand = random.Random(606)
        bound = 2 * math.sqrt(2) + 1e-9
        for _ in range(500):
            directions = QuantumDirections(
                (rand.uniform(0, 2 * math.pi), rand.uniform(0, 2 * math.pi)),
                (rand.uniform(0, 2 * math.pi), rand.uniform(0, 2 * math.pi)),
            )
            value, _ = chsh_max(singlet_behavior(directions))
            assert value <= bound


def _random_rational_behavior(rand: random.Random):
    table = {}
    for key in UNIFORM_TABLE:
        parts = [rand.randint(0, 12) for _ in range(4)]
        if sum(parts) == 0:
            parts[0] = 1
        total = sum(parts)
        flat = [F(p, total) for p in parts]
        table[key] = ((flat[0], flat[1]), (flat[2], flat[3]))
    return behavior_from(STANDARD_SCENARIO, table)


def _random_local_mixture(rand: random.Random):
    strategies = enumerate_strategies(STANDARD_SCENARIO)
    parts = [rand.randint(0, 8) for _ in strategies]
    if sum(parts) == 0:
        parts[rand.randrange(len(parts))] = 1
    total = sum(parts)
    return mix(
        [
            (F(p, total), strategy_behavior(STANDARD_SCENARIO, s))
            for p, s in zip(parts, strategies)
            if p
        ]
    )
