"""Deterministic Monte Carlo simulation of common-cause models.

Every random draw is a pure function of ``(seed, trial_index, draw_index)``;
there is no shared generator state, so trials can be computed in any order
or split across workers and still produce bit-identical records.

The generator is fixed and part of this repository's compatibility
contract.  With 64-bit wrapping arithmetic and ``mix`` the splitmix64
finalizer ::

    mix(x): x ^= x >> 30;  x *= 0xBF58476D1CE4E5B9
            x ^= x >> 27;  x *= 0x94D049BB133111EB
            x ^= x >> 31

    word(seed, trial, draw) =
        mix(mix(mix(seed ^ K0) ^ mix(trial ^ K1)) ^ mix(draw ^ K2))

    K0 = 0x9E3779B97F4A7C15   K1 = 0xD1B54A32D192ED03   K2 = 0x8CB92BA72F3D8DD7

and the unit draw is ``(word >> 11) / 2**53``, uniform on [0, 1) with full
double precision.  Draw indices: 0 selects the context (uniform schedule),
1 the cause, 2 Alice's outcome, 3 Bob's outcome.

Sampling is inverse-CDF over causes and outcomes in declaration order;
zero-weight entries are pruned first so cumulative sums are strictly
increasing and ties are impossible.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Iterable, Iterator, Sequence

from .errors import SamplerError
from .models import Model, NonContextualModel, validate_model
from .scenario import Behavior, Context, Prob, Scenario

_MASK64 = (1 << 64) - 1
_K0 = 0x9E3779B97F4A7C15
_K1 = 0xD1B54A32D192ED03
_K2 = 0x8CB92BA72F3D8DD7

TRIAL_HEADER = "trial,alice_setting,bob_setting,cause,a,b"


def _mix64(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def keyed_word(seed: int, trial_index: int, draw_index: int) -> int:
    """The contract generator: a 64-bit word from the three key components."""
    h = _mix64((seed & _MASK64) ^ _K0)
    h = _mix64(h ^ _mix64((trial_index & _MASK64) ^ _K1))
    return _mix64(h ^ _mix64((draw_index & _MASK64) ^ _K2))


def unit_draw(seed: int, trial_index: int, draw_index: int) -> float:
    """Uniform float in [0, 1), a pure function of its three arguments."""
    return (keyed_word(seed, trial_index, draw_index) >> 11) * 2.0**-53


@dataclass(frozen=True)
class TrialRecord:
    """One joint-measurement run: actualized cause and both outcomes."""

    index: int
    context: Context
    cause_id: str
    alice_outcome: int
    bob_outcome: int


@dataclass(frozen=True)
class Schedule:
    """How contexts are assigned to trials."""

    kind: str  # "fixed" | "uniform" | "cycle"
    context: Context | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "uniform", "cycle"):
            raise SamplerError(f"unknown schedule kind {self.kind!r}", code="BAD_PLAN")
        if (self.kind == "fixed") != (self.context is not None):
            raise SamplerError(
                "fixed schedules carry a context; uniform/cycle do not",
                code="BAD_PLAN",
            )

    @staticmethod
    def fixed(context: Context) -> "Schedule":
        return Schedule("fixed", context)

    @staticmethod
    def uniform() -> "Schedule":
        return Schedule("uniform")

    @staticmethod
    def cycle() -> "Schedule":
        return Schedule("cycle")


@dataclass(frozen=True)
class ExperimentPlan:
    seed: int
    trials: int
    schedule: Schedule

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise SamplerError("plan needs at least one trial", code="BAD_PLAN")


@dataclass(frozen=True)
class EmpiricalBehavior:
    """Outcome counts per context, with exact frequency tables on demand."""

    scenario: Scenario
    counts: dict[Context, tuple[tuple[int, ...], ...]]

    def total(self, context: Context) -> int:
        rows = self.counts.get(context)
        if rows is None:
            return 0
        return sum(v for row in rows for v in row)

    def frequencies(self, context: Context) -> tuple[tuple[Fraction, ...], ...]:
        total = self.total(context)
        if total == 0:
            raise SamplerError(
                f"context ({context.alice},{context.bob}) was never sampled",
                code="UNSAMPLED_CONTEXT",
            )
        return tuple(
            tuple(Fraction(v, total) for v in row) for row in self.counts[context]
        )

    def sampled_contexts(self) -> tuple[Context, ...]:
        return tuple(
            ctx for ctx in self.scenario.contexts() if self.total(ctx) > 0
        )

    def merge(self, other: "EmpiricalBehavior") -> "EmpiricalBehavior":
        """Add counts; commutative and associative, so partial runs combine freely."""
        if other.scenario != self.scenario:
            raise SamplerError(
                "cannot merge counts from different scenarios",
                code="SCENARIO_MISMATCH",
            )
        merged = {}
        for ctx in self.scenario.contexts():
            mine = self.counts.get(ctx)
            theirs = other.counts.get(ctx)
            if mine is None and theirs is None:
                continue
            if mine is None:
                merged[ctx] = theirs
            elif theirs is None:
                merged[ctx] = mine
            else:
                merged[ctx] = tuple(
                    tuple(x + y for x, y in zip(row_a, row_b))
                    for row_a, row_b in zip(mine, theirs)
                )
        return EmpiricalBehavior(self.scenario, merged)


@dataclass(frozen=True)
class ExperimentRun:
    empirical: EmpiricalBehavior
    records: tuple[TrialRecord, ...]


class _Arm:
    """Pre-pruned inverse-CDF tables for one context of one model."""

    __slots__ = ("cause_ids", "cause_cum", "alice_cdfs", "bob_cdfs")

    def __init__(
        self,
        causes: Sequence[tuple[str, Prob]],
        alice_rows: Sequence[tuple[Prob, ...]],
        bob_rows: Sequence[tuple[Prob, ...]],
    ) -> None:
        self.cause_ids: list[str] = []
        self.cause_cum: list[Prob] = []
        self.alice_cdfs: list[list[tuple[Prob, int]]] = []
        self.bob_cdfs: list[list[tuple[Prob, int]]] = []
        acc: Prob = Fraction(0)
        for (cause_id, weight), alice_row, bob_row in zip(causes, alice_rows, bob_rows):
            if weight == 0:
                continue
            acc = acc + weight
            self.cause_ids.append(cause_id)
            self.cause_cum.append(_fast_threshold(acc))
            self.alice_cdfs.append(_outcome_cdf(alice_row))
            self.bob_cdfs.append(_outcome_cdf(bob_row))


def _fast_threshold(value: Prob) -> Prob:
    # Exact-as-float thresholds let the hot loop compare float-to-float.
    if isinstance(value, Fraction):
        as_float = float(value)
        if Fraction(as_float) == value:
            return as_float
    return value


def _outcome_cdf(row: Sequence[Prob]) -> list[tuple[Prob, int]]:
    cdf: list[tuple[Prob, int]] = []
    acc: Prob = Fraction(0)
    for index, p in enumerate(row, start=1):
        if p == 0:
            continue
        acc = acc + p
        cdf.append((_fast_threshold(acc), index))
    return cdf


def _pick(cdf: Sequence[tuple[Prob, int]], u: float) -> int:
    for threshold, index in cdf:
        if u < threshold:
            return index
    # Cumulative error in float thresholds can leave u at the very top.
    return cdf[-1][1]


def _build_arms(model: Model) -> dict[Context, _Arm]:
    validate_model(model)
    arms: dict[Context, _Arm] = {}
    for ctx in model.scenario.contexts():
        if isinstance(model, NonContextualModel):
            causes = [(c.id, c.weight) for c in model.causes]
            alice_rows = [
                model.alice_response.outcome_probs(ctx.alice, c.id)
                for c in model.causes
            ]
            bob_rows = [
                model.bob_response.outcome_probs(ctx.bob, c.id) for c in model.causes
            ]
        else:
            block = model.blocks[ctx]
            causes = [(c.id, c.weight) for c in block.causes]
            alice_rows = [
                block.alice_response.outcome_probs(ctx.alice, c.id)
                for c in block.causes
            ]
            bob_rows = [
                block.bob_response.outcome_probs(ctx.bob, c.id)
                for c in block.causes
            ]
        arms[ctx] = _Arm(causes, alice_rows, bob_rows)
    return arms


def _draw_record(arm: _Arm, ctx: Context, trial_index: int, seed: int) -> TrialRecord:
    u_cause = unit_draw(seed, trial_index, 1)
    k = 0
    cause_cum = arm.cause_cum
    while k < len(cause_cum) - 1 and not u_cause < cause_cum[k]:
        k += 1
    a = _pick(arm.alice_cdfs[k], unit_draw(seed, trial_index, 2))
    b = _pick(arm.bob_cdfs[k], unit_draw(seed, trial_index, 3))
    return TrialRecord(trial_index, ctx, arm.cause_ids[k], a, b)


def sample_trial(
    model: Model, context: Context, trial_index: int, seed: int
) -> TrialRecord:
    """Run one joint measurement: actualize a cause, then both outcomes.

    A pure function of ``(seed, trial_index)`` for a given model and
    context; repeated calls return the identical record.
    """
    arms = _build_arms(model)
    try:
        arm = arms[context]
    except KeyError:
        raise SamplerError(
            f"model has no context ({context.alice},{context.bob})",
            code="BAD_PLAN",
        ) from None
    return _draw_record(arm, context, trial_index, seed)


def run_experiment(model: Model, plan: ExperimentPlan) -> ExperimentRun:
    """Sample ``plan.trials`` runs; the result is independent of execution order.

    Trial ``i`` depends only on ``(plan.seed, i)``, so parallel partitions of
    the index range merge (via ``EmpiricalBehavior.merge``) into exactly the
    serial result.
    """
    arms = _build_arms(model)
    scenario = model.scenario
    contexts = scenario.contexts()
    schedule = plan.schedule
    if schedule.kind == "fixed" and schedule.context not in arms:
        raise SamplerError(
            f"fixed schedule names a context outside the scenario: "
            f"({schedule.context.alice},{schedule.context.bob})",
            code="BAD_PLAN",
        )
    n_ctx = len(contexts)
    counts = {
        ctx: [
            [0] * scenario.bob_outcomes[ctx.bob]
            for _ in range(scenario.alice_outcomes[ctx.alice])
        ]
        for ctx in contexts
    }
    records: list[TrialRecord] = []
    seed = plan.seed
    for i in range(plan.trials):
        if schedule.kind == "fixed":
            ctx = schedule.context
        elif schedule.kind == "cycle":
            ctx = contexts[i % n_ctx]
        else:
            ctx = contexts[int(unit_draw(seed, i, 0) * n_ctx)]
        record = _draw_record(arms[ctx], ctx, i, seed)
        records.append(record)
        counts[ctx][record.alice_outcome - 1][record.bob_outcome - 1] += 1
    empirical = EmpiricalBehavior(
        scenario,
        {
            ctx: tuple(tuple(row) for row in grid)
            for ctx, grid in counts.items()
            if any(v for row in grid for v in row)
        },
    )
    return ExperimentRun(empirical, tuple(records))


def empirical_deviation(empirical: EmpiricalBehavior, behavior: Behavior) -> Prob:
    """Largest entrywise gap between observed frequencies and exact probabilities.

    Every context of the scenario must have been sampled at least once.
    """
    if empirical.scenario != behavior.scenario:
        raise SamplerError(
            "empirical data and behavior use different scenarios",
            code="SCENARIO_MISMATCH",
        )
    deviation: Prob = Fraction(0)
    for ctx in behavior.scenario.contexts():
        freqs = empirical.frequencies(ctx)
        grid = behavior.table[ctx]
        for freq_row, prob_row in zip(freqs, grid):
            for f, p in zip(freq_row, prob_row):
                gap = abs(f - p)
                if gap > deviation:
                    deviation = gap
    return deviation


def trial_lines(scenario: Scenario, records: Iterable[TrialRecord]) -> Iterator[str]:
    """Line-oriented export: header, then one comma-separated record per line."""
    yield TRIAL_HEADER
    for r in records:
        yield (
            f"{r.index},{scenario.alice_settings[r.context.alice]},"
            f"{scenario.bob_settings[r.context.bob]},{r.cause_id},"
            f"{r.alice_outcome},{r.bob_outcome}"
        )


def write_trials(
    stream: IO[str], scenario: Scenario, records: Iterable[TrialRecord]
) -> None:
    for line in trial_lines(scenario, records):
        stream.write(line + "\n")
