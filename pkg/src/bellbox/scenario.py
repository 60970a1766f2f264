"""Measurement scenarios, contexts, and the joint-probability table algebra.

Probabilities are either exact :class:`fractions.Fraction` values or Python
floats; the runtime type of an entry is its representation tag.  Operations
on all-exact inputs stay exact (bit-identical results along any evaluation
path); arithmetic that mixes the two kinds promotes to float, with
normalization checked against ``FLOAT_ATOL``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Literal, Sequence, Union

from .errors import InvalidBehaviorError, MixtureError, ScenarioShapeError

Prob = Union[Fraction, float]
Party = Literal["alice", "bob"]

PARTIES: tuple[Party, Party] = ("alice", "bob")

#: Normalization slack accepted for floating-point tables.
FLOAT_ATOL = 1e-12


def is_exact(value: Prob) -> bool:
    """True when ``value`` participates in exact-rational arithmetic."""
    return isinstance(value, (Fraction, int))


def outcome_sign(index: int) -> int:
    """Signed value of a two-outcome measurement: index 1 is +1, index 2 is -1.

    Outcome indices are 1-based everywhere in this package.  Settings with
    more than two outcomes have no signed-value convention.
    """
    if index == 1:
        return 1
    if index == 2:
        return -1
    raise ScenarioShapeError(
        f"outcome index {index} has no signed value; only two-outcome "
        "settings map onto +1/-1",
        code="NON_BINARY_SETTING",
    )


@dataclass(frozen=True)
class Scenario:
    """Two-party measurement layout: setting labels and outcome counts.

    ``alice_outcomes[i]`` is the number of outcomes of Alice's ``i``-th
    setting (and likewise for Bob); every setting needs at least two.
    """

    alice_settings: tuple[str, ...]
    bob_settings: tuple[str, ...]
    alice_outcomes: tuple[int, ...]
    bob_outcomes: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "alice_settings", tuple(self.alice_settings))
        object.__setattr__(self, "bob_settings", tuple(self.bob_settings))
        object.__setattr__(self, "alice_outcomes", tuple(self.alice_outcomes))
        object.__setattr__(self, "bob_outcomes", tuple(self.bob_outcomes))
        for party in PARTIES:
            labels = self.settings(party)
            counts = self.outcome_counts(party)
            if not labels:
                raise ScenarioShapeError(
                    f"{party} needs at least one setting", code="SCENARIO_SHAPE"
                )
            if len(set(labels)) != len(labels):
                raise ScenarioShapeError(
                    f"duplicate setting label for {party}: {labels}",
                    code="SCENARIO_SHAPE",
                )
            if len(counts) != len(labels):
                raise ScenarioShapeError(
                    f"{party} has {len(labels)} settings but "
                    f"{len(counts)} outcome counts",
                    code="SCENARIO_SHAPE",
                )
            if any(c < 2 for c in counts):
                raise ScenarioShapeError(
                    f"every setting needs at least 2 outcomes, got {counts}",
                    code="SCENARIO_SHAPE",
                )

    @staticmethod
    def binary(
        alice_settings: Sequence[str], bob_settings: Sequence[str]
    ) -> "Scenario":
        """Scenario in which every setting has exactly two outcomes."""
        return Scenario(
            tuple(alice_settings),
            tuple(bob_settings),
            (2,) * len(alice_settings),
            (2,) * len(bob_settings),
        )

    @property
    def party_count(self) -> int:
        return 2

    def settings(self, party: Party) -> tuple[str, ...]:
        return self.alice_settings if party == "alice" else self.bob_settings

    def outcome_counts(self, party: Party) -> tuple[int, ...]:
        return self.alice_outcomes if party == "alice" else self.bob_outcomes

    def setting_index(self, party: Party, label: str) -> int:
        try:
            return self.settings(party).index(label)
        except ValueError:
            raise ScenarioShapeError(
                f"{party} has no setting {label!r}", code="SCENARIO_SHAPE"
            ) from None

    def contexts(self) -> tuple["Context", ...]:
        """All joint-setting pairs, ordered lexicographically by index."""
        return tuple(
            Context(x, y)
            for x in range(len(self.alice_settings))
            for y in range(len(self.bob_settings))
        )

    def is_two_by_two(self) -> bool:
        """Two settings per party, two outcomes everywhere."""
        return (
            len(self.alice_settings) == 2
            and len(self.bob_settings) == 2
            and set(self.alice_outcomes) == {2}
            and set(self.bob_outcomes) == {2}
        )


@dataclass(frozen=True, order=True)
class Context:
    """One joint measurement: a setting index for each party."""

    alice: int
    bob: int

    def label(self, scenario: Scenario) -> str:
        return (
            f"({scenario.alice_settings[self.alice]},"
            f"{scenario.bob_settings[self.bob]})"
        )


@dataclass(frozen=True)
class Behavior:
    """Joint outcome probabilities ``table[ctx][a-1][b-1]`` for every context.

    Treat instances as immutable; all operations return new objects.
    """

    scenario: Scenario
    table: dict[Context, tuple[tuple[Prob, ...], ...]]

    def __post_init__(self) -> None:
        frozen = {
            ctx: tuple(tuple(row) for row in rows)
            for ctx, rows in self.table.items()
        }
        object.__setattr__(self, "table", frozen)

    def prob(self, context: Context, a: int, b: int) -> Prob:
        """Entry for 1-based outcome indices ``a`` (Alice) and ``b`` (Bob)."""
        return self.table[context][a - 1][b - 1]

    def entries(self) -> Iterator[tuple[Context, int, int, Prob]]:
        """All entries in canonical order: contexts lexicographic, (a, b) row-major."""
        for ctx in self.scenario.contexts():
            rows = self.table[ctx]
            for a, row in enumerate(rows, start=1):
                for b, value in enumerate(row, start=1):
                    yield ctx, a, b, value

    @property
    def exact(self) -> bool:
        return all(
            is_exact(v) for rows in self.table.values() for row in rows for v in row
        )


@dataclass(frozen=True)
class Validation:
    """Outcome of a behavior check; ``code``/``context`` name the first violation."""

    ok: bool
    code: str | None = None
    context: Context | None = None
    message: str = ""


def validate_behavior(behavior: Behavior) -> Validation:
    """Check non-negativity, per-context normalization, and context coverage.

    Exact tables must sum to 1 exactly; tables containing floats may deviate
    by at most ``FLOAT_ATOL``.  The first violated invariant is reported.
    """
    scenario = behavior.scenario
    known = set(scenario.contexts())
    for ctx in behavior.table:
        if ctx not in known:
            return Validation(
                False,
                "MISSING_CONTEXT",
                ctx,
                f"table mentions context ({ctx.alice},{ctx.bob}) outside the scenario",
            )
    for ctx in scenario.contexts():
        rows = behavior.table.get(ctx)
        label = ctx.label(scenario)
        if rows is None:
            return Validation(
                False, "MISSING_CONTEXT", ctx, f"no table for context {label}"
            )
        na = scenario.alice_outcomes[ctx.alice]
        nb = scenario.bob_outcomes[ctx.bob]
        if len(rows) != na or any(len(row) != nb for row in rows):
            return Validation(
                False,
                "MISSING_CONTEXT",
                ctx,
                f"table for context {label} is not {na}x{nb}",
            )
        total: Prob = Fraction(0)
        all_exact = True
        for row in rows:
            for value in row:
                if value < 0:
                    return Validation(
                        False,
                        "NEGATIVE_ENTRY",
                        ctx,
                        f"negative probability {value} in context {label}",
                    )
                all_exact = all_exact and is_exact(value)
                total = total + value
        if all_exact:
            if total != 1:
                return Validation(
                    False,
                    "UNNORMALIZED_CONTEXT",
                    ctx,
                    f"context {label} sums to {total}, expected 1",
                )
        elif abs(total - 1) > FLOAT_ATOL:
            return Validation(
                False,
                "UNNORMALIZED_CONTEXT",
                ctx,
                f"context {label} sums to {total!r}, expected 1 within {FLOAT_ATOL}",
            )
    return Validation(True)


def require_valid(behavior: Behavior) -> Behavior:
    """Return the behavior unchanged, raising on any invariant violation."""
    result = validate_behavior(behavior)
    if not result.ok:
        raise InvalidBehaviorError(result.message, code=result.code or "INTERNAL")
    return behavior


@dataclass(frozen=True)
class MarginalTable:
    """Single-party outcome distributions, one row per co-party setting.

    ``rows[(party, setting, co_setting)]`` is the outcome distribution of
    ``setting`` observed jointly with the other party's ``co_setting``.
    Setting-independence of these rows across co-settings is exactly the
    no-signaling condition.
    """

    scenario: Scenario
    rows: dict[tuple[Party, int, int], tuple[Prob, ...]]

    def row(self, party: Party, setting: int, co_setting: int) -> tuple[Prob, ...]:
        return self.rows[(party, setting, co_setting)]


def marginals(behavior: Behavior) -> MarginalTable:
    """Marginal distributions of a valid behavior; exact on exact input."""
    require_valid(behavior)
    scenario = behavior.scenario
    rows: dict[tuple[Party, int, int], tuple[Prob, ...]] = {}
    for ctx in scenario.contexts():
        grid = behavior.table[ctx]
        na = scenario.alice_outcomes[ctx.alice]
        nb = scenario.bob_outcomes[ctx.bob]
        rows[("alice", ctx.alice, ctx.bob)] = tuple(
            _exact_sum(grid[a][b] for b in range(nb)) for a in range(na)
        )
        rows[("bob", ctx.bob, ctx.alice)] = tuple(
            _exact_sum(grid[a][b] for a in range(na)) for b in range(nb)
        )
    return MarginalTable(scenario, rows)


def _exact_sum(values: Iterable[Prob]) -> Prob:
    total: Prob = Fraction(0)
    for v in values:
        total = total + v
    return total


def expectation(behavior: Behavior, context: Context) -> Prob:
    """Signed correlation of one context: P(1,1)+P(2,2)-P(1,2)-P(2,1).

    Defined only when both settings of the context are two-outcome.
    """
    scenario = behavior.scenario
    if (
        scenario.alice_outcomes[context.alice] != 2
        or scenario.bob_outcomes[context.bob] != 2
    ):
        raise ScenarioShapeError(
            f"expectation needs two-outcome settings in context "
            f"{context.label(scenario)}",
            code="NON_BINARY_SETTING",
        )
    grid = behavior.table[context]
    return grid[0][0] + grid[1][1] - grid[0][1] - grid[1][0]


def mix(components: Sequence[tuple[Prob, Behavior]]) -> Behavior:
    """Entrywise convex combination of behaviors over one scenario.

    Weights must be non-negative and sum to 1 (exactly when every weight is
    exact, within ``FLOAT_ATOL`` otherwise).
    """
    if not components:
        raise MixtureError("mixture needs at least one component", code="BAD_WEIGHTS")
    scenario = components[0][1].scenario
    weights = []
    for weight, behavior in components:
        if behavior.scenario != scenario:
            raise MixtureError(
                "all mixture components must share one scenario",
                code="SCENARIO_MISMATCH",
            )
        if weight < 0:
            raise MixtureError(f"negative weight {weight}", code="BAD_WEIGHTS")
        weights.append(Fraction(weight) if isinstance(weight, int) else weight)
    total = _exact_sum(weights)
    if all(is_exact(w) for w in weights):
        if total != 1:
            raise MixtureError(f"weights sum to {total}, expected 1", code="BAD_WEIGHTS")
    elif abs(total - 1) > FLOAT_ATOL:
        raise MixtureError(f"weights sum to {total!r}, expected 1", code="BAD_WEIGHTS")

    table: dict[Context, tuple[tuple[Prob, ...], ...]] = {}
    for ctx in scenario.contexts():
        na = scenario.alice_outcomes[ctx.alice]
        nb = scenario.bob_outcomes[ctx.bob]
        table[ctx] = tuple(
            tuple(
                _exact_sum(
                    w * comp.table[ctx][a][b]
                    for w, (_, comp) in zip(weights, components)
                )
                for b in range(nb)
            )
            for a in range(na)
        )
    return Behavior(scenario, table)
