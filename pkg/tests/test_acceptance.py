"""Acceptance suite: one test per release criterion, at its stated tolerance.

Each test prints a ``PASS criterion N`` line on success (run with ``-s`` or
``pytest tests/test_acceptance.py -v`` to see them); any failure fails the
build.  Criteria with runtime budgets assert them with a wall clock.
"""

import io
import math
import random
import time
from fractions import Fraction

import pytest

from bellbox import (
    Classification,
    Context,
    QuantumDirections,
    builtin_document,
    chsh_max,
    classify,
    condition_on_cause,
    empirical_deviation,
    exact_behavior,
    expectation,
    local_membership,
    marginals,
    mix,
    nosignaling_residual,
    parse_document,
    random_noncontextual_model,
    run_experiment,
    sample_trial,
    serialize_document,
    singlet_behavior,
    singlet_optimal_directions,
    socks_color,
    socks_off,
    socks_on,
    write_trials,
    ExperimentPlan,
    Schedule,
)
from bellbox.cli import run_cli
from _docgen import mutate_text, random_document
from _oracles import chsh_by_enumeration, color_variant_table, singlet_state_table
from _tables import (
    LAMBDA1_MARGINALS,
    LAMBDA1_TABLE,
    SOCKS_OFF_EXPECTATIONS,
    SOCKS_OFF_TABLE,
    SOCKS_ON_EXPECTATIONS,
    SOCKS_ON_TABLE,
    STANDARD_SCENARIO,
    behavior_from,
)

F = Fraction


def _report(number: int, text: str) -> None:
    print(f"PASS criterion {number}: {text}")


def _cli(capsys, *argv) -> str:
    assert run_cli(list(argv)) == 0
    return capsys.readouterr().out


def test_criterion_01_exact_noncontextual_table(capsys):
    start = time.perf_counter()
    out = _cli(capsys, "exact", "socks-on", "--output", "machine")
    elapsed = time.perf_counter() - start
    parsed = parse_document(out)
    assert parsed.ok
    emitted = parsed.document.behavior
    expected = behavior_from(STANDARD_SCENARIO, SOCKS_ON_TABLE)
    assert emitted == expected
    assert emitted.exact and all(
        isinstance(v, Fraction) for _, _, _, v in emitted.entries()
    )
    assert elapsed < 1.0
    _report(1, f"exact socks-on emits the 16 probabilities bit-exactly ({elapsed:.2f}s)")


def test_criterion_02_expectations_chsh_and_local_class(capsys):
    b = exact_behavior(socks_on())
    values = tuple(expectation(b, c) for c in b.scenario.contexts())
    assert values == SOCKS_ON_EXPECTATIONS
    assert values[0] + values[1] + values[2] - values[3] == 2
    report = classify(b)
    assert report.classification is Classification.LOCAL
    assert report.decomposition is not None
    assert report.decomposition.to_behavior() == b  # bit-exact reconstruction
    out = _cli(capsys, "classify", "socks-on")
    assert "classification: LOCAL" in out
    _report(2, "socks-on expectations (1,0,0,-1), CHSH 2, LOCAL with exact decomposition")


def test_criterion_03_contextual_maximum(capsys):
    start = time.perf_counter()
    b = exact_behavior(socks_off())
    assert {
        (ctx.alice, ctx.bob): b.table[ctx] for ctx in b.scenario.contexts()
    } == SOCKS_OFF_TABLE
    values = tuple(expectation(b, c) for c in b.scenario.contexts())
    assert values == SOCKS_OFF_EXPECTATIONS
    report = classify(b)
    assert report.chsh_max == 4
    assert report.nosignaling_residual == 0
    assert isinstance(report.nosignaling_residual, Fraction)
    assert report.classification is Classification.NONLOCAL_NOSIGNALING
    membership = local_membership(b)
    assert not membership.feasible
    assert membership.certificate.verify(b)
    elapsed = time.perf_counter() - start
    out = _cli(capsys, "classify", "socks-off")
    assert "NONLOCAL_NOSIGNALING" in out
    assert elapsed < 1.0
    _report(
        3,
        "socks-off expectations (1,1,1,-1), CHSH 4, residual 0, INFEASIBLE "
        f"with verified certificate ({elapsed:.2f}s)",
    )


def test_criterion_04_conditioning_and_factorization():
    model = socks_on()
    cond = condition_on_cause(model, "lambda1")
    assert {
        (ctx.alice, ctx.bob): cond.table[ctx] for ctx in cond.scenario.contexts()
    } == LAMBDA1_TABLE
    table = marginals(cond)
    for (party, own, _co), row in table.rows.items():
        assert row == LAMBDA1_MARGINALS[(party, own)]
    for cause in model.causes:
        conditioned = condition_on_cause(model, cause.id)
        m = marginals(conditioned)
        for ctx in model.scenario.contexts():
            pa = m.row("alice", ctx.alice, ctx.bob)
            pb = m.row("bob", ctx.bob, ctx.alice)
            for a in range(2):
                for b in range(2):
                    assert conditioned.table[ctx][a][b] == pa[a] * pb[b]
    _report(4, "conditioning on the first hidden state reproduces the fixed-cause table, marginals, and product form")


def test_criterion_05_mixture_identity():
    model = socks_on()
    mixed = mix([(c.weight, condition_on_cause(model, c.id)) for c in model.causes])
    assert mixed == exact_behavior(model)
    assert mixed == behavior_from(STANDARD_SCENARIO, SOCKS_ON_TABLE)
    _report(5, "equal-weight mixture of the four conditioned behaviors equals the joint table bit-exactly")


def test_criterion_06_random_noncontextual_models_bounded():
    start = time.perf_counter()
    rand = random.Random(20260810)
    for i in range(1000):
        model = random_noncontextual_model(rand)
        b = exact_behavior(model)
        assert b.exact, f"model {i} produced floats"
        value, _ = chsh_max(b)
        assert isinstance(value, Fraction)
        assert value <= 2, f"model {i} violates the bound: {value}"
        residual = nosignaling_residual(b)
        assert residual == 0, f"model {i} signals: {residual}"
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    _report(6, f"1000 random shared-cause models: CHSH <= 2 and residual = 0, exactly ({elapsed:.1f}s)")


def test_criterion_07_signaling_variant(capsys):
    b = exact_behavior(socks_color())
    report = classify(b)
    assert report.nosignaling_residual == F(1, 2)
    assert report.classification is Classification.SIGNALING
    # Cross-check the computed CHSH maximum against the independent
    # enumeration of the documented dynamics.  The value is reported as
    # computed (2); the stronger headline figure is deliberately not
    # asserted anywhere (see README "open points").
    oracle_table = color_variant_table()
    assert {
        (ctx.alice, ctx.bob): b.table[ctx] for ctx in b.scenario.contexts()
    } == oracle_table
    assert report.chsh_max == chsh_by_enumeration(oracle_table) == 2
    out = _cli(capsys, "classify", "socks-color")
    assert "classification: SIGNALING" in out
    assert "residual = 1/2" in out
    _report(7, "socks-color: residual exactly 1/2, SIGNALING; CHSH max 2 cross-checked by enumeration")


def test_criterion_08_quantum_bound():
    b = singlet_behavior(singlet_optimal_directions())
    value, _ = chsh_max(b)
    assert abs(value - 2 * math.sqrt(2)) < 1e-9
    oracle = singlet_state_table((0.0, math.pi / 2), (math.pi / 4, 3 * math.pi / 4))
    for ctx in b.scenario.contexts():
        for a in range(2):
            for col in range(2):
                assert (
                    abs(b.table[ctx][a][col] - oracle[(ctx.alice, ctx.bob)][a][col])
                    < 1e-12
                )
    rand = random.Random(80808)
    bound = 2 * math.sqrt(2) + 1e-9
    for _ in range(10000):
        directions = QuantumDirections(
            (rand.uniform(0, 2 * math.pi), rand.uniform(0, 2 * math.pi)),
            (rand.uniform(0, 2 * math.pi), rand.uniform(0, 2 * math.pi)),
        )
        value, _ = chsh_max(singlet_behavior(directions))
        assert value <= bound
    _report(8, "singlet at the optimal angles reaches 2*sqrt(2) within 1e-9; 10^4 random angle sets never exceed it")


def test_criterion_09_sampler_convergence_and_determinism():
    start = time.perf_counter()
    model = socks_off()
    plan = ExperimentPlan(424242, 400000, Schedule.cycle())  # 1e5 per context
    run = run_experiment(model, plan)
    for ctx in model.scenario.contexts():
        assert run.empirical.total(ctx) == 100000
    deviation = empirical_deviation(run.empirical, exact_behavior(model))
    assert deviation <= 0.02

    replay_plan = ExperimentPlan(7171, 20000, Schedule.uniform())
    stream_a = io.StringIO()
    stream_b = io.StringIO()
    write_trials(stream_a, model.scenario, run_experiment(model, replay_plan).records)
    write_trials(stream_b, model.scenario, run_experiment(model, replay_plan).records)
    assert stream_a.getvalue() == stream_b.getvalue()

    parallel_plan = ExperimentPlan(7171, 6000, Schedule.uniform())
    serial = run_experiment(model, parallel_plan)

    def replay_chunk(bounds):
        lo, hi = bounds
        return [
            sample_trial(model, record.context, record.index, parallel_plan.seed)
            for record in serial.records[lo:hi]
        ]

    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=3) as pool:
        pieces = list(pool.map(replay_chunk, ((0, 2000), (2000, 4500), (4500, 6000))))
    merged = [r for piece in pieces for r in piece]
    assert tuple(merged) == serial.records
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    _report(
        9,
        f"socks-off at 1e5 trials/context deviates {float(deviation):.4f} <= 0.02; "
        f"streams byte-identical and order-independent ({elapsed:.1f}s)",
    )


def test_criterion_10_format_robustness():
    names = ("socks-on", "socks-off", "socks-color", "singlet-optimal")
    for name in names:
        doc = builtin_document(name)
        text = serialize_document(doc)
        result = parse_document(text)
        assert result.ok and result.document == doc
        assert serialize_document(result.document) == text

    rand = random.Random(5150)
    for i in range(500):
        doc = random_document(rand)
        text = serialize_document(doc)
        result = parse_document(text)
        assert result.ok, f"document {i} failed: {[d.render() for d in result.errors()]}"
        assert result.document == doc
        assert serialize_document(result.document) == text

    sources = [serialize_document(builtin_document(n)) for n in names]
    mutant_rand = random.Random(61616)
    diagnosed = 0
    for i in range(1000):
        text = mutate_text(mutant_rand, mutant_rand.choice(sources))
        result = parse_document(text)  # must never raise
        n_lines = max(1, len(text.splitlines()))
        for diag in result.diagnostics:
            assert 1 <= diag.line <= n_lines, f"case {i}: line {diag.line}"
            assert diag.column >= 1
        if not result.ok:
            diagnosed += 1
            assert result.errors()
    assert diagnosed >= 600
    _report(
        10,
        f"round-trip identity on builtins + 500 generated documents; 1000 "
        f"malformed cases, {diagnosed} diagnosed, zero crashes",
    )
