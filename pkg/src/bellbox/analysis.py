"""CHSH functionals, marginal-law residuals, and local-polytope membership.

Membership is decided by exact-rational linear feasibility over the 16
deterministic strategies of a two-setting/two-outcome scenario; the answer
comes with either an explicit convex decomposition or a verified separating
functional, so both the positive and negative cases are checkable.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import InvalidBehaviorError, MembershipError, ScenarioShapeError
from .scenario import (
    Behavior,
    Context,
    Prob,
    Scenario,
    expectation,
    marginals,
    mix,
    require_valid,
    validate_behavior,
)
from .simplex import solve_equality_feasibility

Arrangement = tuple[int, int, int, int]

#: Residual above which a floating behavior counts as signaling.
SIGNALING_ATOL = 1e-9

#: Floats entering the membership solver are snapped to rationals with
#: denominator at most this.
SNAP_DENOMINATOR = 10**6


def arrangement_str(arrangement: Sequence[int]) -> str:
    return "".join("+" if s > 0 else "-" for s in arrangement)


def chsh_arrangements() -> tuple[Arrangement, ...]:
    """The 8 admissible sign vectors: four signs with an odd number of minuses.

    Ordered by their ``+``/``-`` string, which puts the standard
    ``(+,+,+,-)`` combination first.
    """
    odd = [
        signs
        for signs in itertools.product((1, -1), repeat=4)
        if sum(1 for s in signs if s < 0) % 2 == 1
    ]
    return tuple(sorted(odd, key=arrangement_str))


def _require_two_by_two(scenario: Scenario) -> None:
    if not scenario.is_two_by_two():
        raise ScenarioShapeError(
            "CHSH analysis needs two settings per party with two outcomes each",
            code="SCENARIO_SHAPE",
        )


def chsh_value(behavior: Behavior, arrangement: Arrangement) -> Prob:
    """Signed sum of the four context expectations, contexts in lexicographic order."""
    _require_two_by_two(behavior.scenario)
    contexts = behavior.scenario.contexts()
    total: Prob = Fraction(0)
    for sign, ctx in zip(arrangement, contexts):
        total = total + sign * expectation(behavior, ctx)
    return total


def chsh_max(behavior: Behavior) -> tuple[Prob, Arrangement]:
    """Maximum |CHSH| over the 8 arrangements, ties broken by sign-string order."""
    best: Prob | None = None
    best_arrangement: Arrangement | None = None
    for arrangement in chsh_arrangements():
        value = abs(chsh_value(behavior, arrangement))
        if best is None or value > best:
            best = value
            best_arrangement = arrangement
    assert best is not None and best_arrangement is not None
    return best, best_arrangement


def nosignaling_residual(behavior: Behavior) -> Prob:
    """Largest marginal shift any party can detect across co-party settings.

    Zero (exactly, for exact tables) iff the behavior satisfies the
    no-signaling conditions.
    """
    table = marginals(behavior)
    scenario = behavior.scenario
    residual: Prob = Fraction(0)
    for party, own_count, co_count in (
        ("alice", len(scenario.alice_settings), len(scenario.bob_settings)),
        ("bob", len(scenario.bob_settings), len(scenario.alice_settings)),
    ):
        for own in range(own_count):
            rows = [table.row(party, own, co) for co in range(co_count)]
            for outcome in range(len(rows[0])):
                values = [row[outcome] for row in rows]
                gap = max(values) - min(values)
                if gap > residual:
                    residual = gap
    return residual


# ---------------------------------------------------------------------------
# Deterministic strategies and the local polytope
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class DeterministicStrategy:
    """Fixed outcome (1-based) for every setting of each party."""

    alice: tuple[int, ...]
    bob: tuple[int, ...]

    def hits(self, ctx: Context, a: int, b: int) -> bool:
        return self.alice[ctx.alice] == a and self.bob[ctx.bob] == b


def enumerate_strategies(scenario: Scenario) -> tuple[DeterministicStrategy, ...]:
    """All deterministic strategies, in lexicographic order."""
    alice_choices = itertools.product(
        *[range(1, n + 1) for n in scenario.alice_outcomes]
    )
    strategies = []
    for alice in alice_choices:
        for bob in itertools.product(
            *[range(1, n + 1) for n in scenario.bob_outcomes]
        ):
            strategies.append(DeterministicStrategy(tuple(alice), tuple(bob)))
    return tuple(strategies)


def strategy_behavior(scenario: Scenario, strategy: DeterministicStrategy) -> Behavior:
    """Point table of one deterministic strategy (a single entry 1 per context)."""
    table = {}
    for ctx in scenario.contexts():
        na = scenario.alice_outcomes[ctx.alice]
        nb = scenario.bob_outcomes[ctx.bob]
        table[ctx] = tuple(
            tuple(
                Fraction(1) if strategy.hits(ctx, a, b) else Fraction(0)
                for b in range(1, nb + 1)
            )
            for a in range(1, na + 1)
        )
    return Behavior(scenario, table)


@dataclass(frozen=True)
class LocalDecomposition:
    """Convex combination of deterministic strategies reproducing a behavior."""

    scenario: Scenario
    weights: tuple[tuple[DeterministicStrategy, Fraction], ...]

    def to_behavior(self) -> Behavior:
        return mix(
            [(w, strategy_behavior(self.scenario, s)) for s, w in self.weights]
        )


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Separating functional: its value on the behavior exceeds the local bound.

    ``coefficients`` assigns an integer-valued Fraction to every table entry;
    ``local_bound`` is the functional's maximum over all deterministic
    strategies, and ``behavior_value > local_bound`` witnesses that the
    behavior lies outside the local polytope.
    """

    scenario: Scenario
    coefficients: dict[tuple[Context, int, int], Fraction]
    behavior_value: Fraction
    local_bound: Fraction

    def evaluate(self, behavior: Behavior) -> Prob:
        total: Prob = Fraction(0)
        for ctx, a, b, value in behavior.entries():
            coeff = self.coefficients.get((ctx, a, b), Fraction(0))
            if coeff != 0:
                total = total + coeff * value
        return total

    def strategy_bound(self) -> Fraction:
        best: Fraction | None = None
        for strategy in enumerate_strategies(self.scenario):
            value = Fraction(0)
            for (ctx, a, b), coeff in self.coefficients.items():
                if strategy.hits(ctx, a, b):
                    value += coeff
            if best is None or value > best:
                best = value
        assert best is not None
        return best

    def verify(self, behavior: Behavior) -> bool:
        """Recompute both sides from scratch against ``behavior``."""
        return (
            self.strategy_bound() == self.local_bound
            and self.evaluate(behavior) > self.local_bound
        )


@dataclass(frozen=True)
class MembershipResult:
    """Answer of the local-polytope test, with its exactly-solved instance.

    ``tested`` is the exact behavior the solver actually decided: the input
    itself when exact, otherwise its snapped-and-renormalized rational
    version (``snap_error`` bounds the entrywise distortion).
    """

    feasible: bool
    decomposition: LocalDecomposition | None
    certificate: InfeasibilityCertificate | None
    tested: Behavior
    snap_error: float


def _snap_behavior(behavior: Behavior) -> tuple[Behavior, float]:
    """Exact-rational stand-in for a floating behavior.

    Entries are snapped to denominators <= SNAP_DENOMINATOR and each context
    renormalized exactly; contexts further than SIGNALING_ATOL from
    normalization are rejected.
    """
    scenario = behavior.scenario
    table = {}
    snap_error = 0.0
    for ctx in scenario.contexts():
        rows = [
            [
                v if isinstance(v, Fraction) else Fraction(v).limit_denominator(SNAP_DENOMINATOR)
                for v in row
            ]
            for row in behavior.table[ctx]
        ]
        total = sum(v for row in rows for v in row)
        if abs(float(total) - 1.0) > SIGNALING_ATOL:
            raise MembershipError(
                f"context {ctx.label(scenario)} sums to {float(total)!r}; "
                "normalize before membership testing",
                code="NUMERIC_INPUT_UNNORMALIZED",
            )
        normalized = [[v / total for v in row] for row in rows]
        for row, orig_row in zip(normalized, behavior.table[ctx]):
            for v, orig in zip(row, orig_row):
                snap_error = max(snap_error, abs(float(v) - float(orig)))
        table[ctx] = tuple(tuple(row) for row in normalized)
    return Behavior(scenario, table), snap_error


def local_membership(behavior: Behavior) -> MembershipResult:
    """Decide whether the behavior mixes from deterministic strategies.

    The feasibility system asks for weights w >= 0 over the 16 strategies
    with the strategy indicators reproducing every table entry and the
    weights summing to 1.  Solved in exact rational arithmetic; floating
    input is snapped first (see ``MembershipResult.tested``).
    """
    _require_two_by_two(behavior.scenario)
    if behavior.exact:
        require_valid(behavior)
        tested, snap_error = behavior, 0.0
    else:
        # Floating input gets the membership tolerance, not the stricter
        # behavior invariant: negative entries still fail validation, but
        # normalization is enforced by the snap step below.
        result = validate_behavior(behavior)
        if not result.ok and result.code != "UNNORMALIZED_CONTEXT":
            raise InvalidBehaviorError(result.message, code=result.code or "INTERNAL")
        tested, snap_error = _snap_behavior(behavior)
    scenario = tested.scenario
    strategies = enumerate_strategies(scenario)
    entry_keys = [(ctx, a, b) for ctx, a, b, _ in tested.entries()]

    matrix = [
        [Fraction(1) if s.hits(ctx, a, b) else Fraction(0) for s in strategies]
        for ctx, a, b in entry_keys
    ]
    rhs = [Fraction(tested.prob(ctx, a, b)) for ctx, a, b in entry_keys]
    matrix.append([Fraction(1)] * len(strategies))
    rhs.append(Fraction(1))

    outcome = solve_equality_feasibility(matrix, rhs)
    if outcome.feasible:
        assert outcome.solution is not None
        weights = tuple(
            (strategy, weight)
            for strategy, weight in zip(strategies, outcome.solution)
            if weight != 0
        )
        decomposition = LocalDecomposition(scenario, weights)
        assert decomposition.to_behavior() == tested
        return MembershipResult(True, decomposition, None, tested, snap_error)

    assert outcome.certificate is not None
    certificate = _build_certificate(tested, entry_keys, outcome.certificate)
    assert certificate.verify(tested)
    return MembershipResult(False, None, certificate, tested, snap_error)


def _build_certificate(
    tested: Behavior,
    entry_keys: list[tuple[Context, int, int]],
    farkas: tuple[Fraction, ...],
) -> InfeasibilityCertificate:
    # Drop the weight-normalization row and rescale to an integer
    # functional; scaling by a positive constant preserves the separation.
    coeffs = list(farkas[: len(entry_keys)])
    denominators = [c.denominator for c in coeffs if c != 0]
    numerators = [abs(c.numerator) for c in coeffs if c != 0]
    if numerators:
        scale = Fraction(math.lcm(*denominators), math.gcd(*numerators))
        coeffs = [c * scale for c in coeffs]
    coefficients = {
        key: coeff for key, coeff in zip(entry_keys, coeffs) if coeff != 0
    }
    certificate = InfeasibilityCertificate(
        tested.scenario,
        coefficients,
        behavior_value=Fraction(0),
        local_bound=Fraction(0),
    )
    value = certificate.evaluate(tested)
    assert isinstance(value, Fraction)
    bound = certificate.strategy_bound()
    return InfeasibilityCertificate(tested.scenario, coefficients, value, bound)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


class Classification(enum.Enum):
    LOCAL = "LOCAL"
    NONLOCAL_NOSIGNALING = "NONLOCAL_NOSIGNALING"
    SIGNALING = "SIGNALING"


@dataclass(frozen=True)
class AnalysisReport:
    """Everything the classifier computed about one behavior."""

    behavior: Behavior
    expectations: tuple[Prob, ...]
    chsh_max: Prob
    chsh_arrangement: Arrangement
    nosignaling_residual: Prob
    classification: Classification
    decomposition: LocalDecomposition | None
    certificate: InfeasibilityCertificate | None
    snap_error: float


def classify(behavior: Behavior) -> AnalysisReport:
    """Full analysis: expectations, CHSH maximum, residual, and class.

    A behavior is SIGNALING when its marginal residual is nonzero (above
    ``SIGNALING_ATOL`` for floating tables); otherwise LOCAL exactly when the
    membership test finds a decomposition, else NONLOCAL_NOSIGNALING.
    """
    require_valid(behavior)
    _require_two_by_two(behavior.scenario)
    expectations = tuple(
        expectation(behavior, ctx) for ctx in behavior.scenario.contexts()
    )
    best, best_arrangement = chsh_max(behavior)
    residual = nosignaling_residual(behavior)
    signaling = residual > 0 if behavior.exact else residual > SIGNALING_ATOL
    if signaling:
        return AnalysisReport(
            behavior,
            expectations,
            best,
            best_arrangement,
            residual,
            Classification.SIGNALING,
            None,
            None,
            0.0,
        )
    membership = local_membership(behavior)
    classification = (
        Classification.LOCAL if membership.feasible else Classification.NONLOCAL_NOSIGNALING
    )
    return AnalysisReport(
        behavior,
        expectations,
        best,
        best_arrangement,
        residual,
        classification,
        membership.decomposition,
        membership.certificate,
        membership.snap_error,
    )
