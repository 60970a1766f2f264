"""Common-cause models and the canonical instances shipped with the package.

Two families are supported:

* :class:`NonContextualModel`: one weighted set of hidden causes shared by
  every context, fixed before the parties choose their settings.  Each party
  answers through a response function of (setting, cause) alone, so the joint
  table is a cause-weighted mixture of product tables.  Behaviors of this
  form always satisfy the CHSH bound of 2 and the no-signaling conditions.
* :class:`ContextualModel`: every context carries its own weighted cause
  set, actualized by the joint measurement itself.  Such models can reach
  the algebraic CHSH maximum of 4 and may or may not respect no-signaling.

The canonical instances model a subject carrying two pocket handkerchiefs
that always share one color (pink half the time) and a pair of socks of
which exactly one is pink.  Alice questions the left side of the subject,
Bob the right; see each builder for its question semantics.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence, Union

from .errors import ModelError
from .scenario import (
    FLOAT_ATOL,
    Behavior,
    Context,
    Party,
    Prob,
    Scenario,
    is_exact,
)

Model = Union["NonContextualModel", "ContextualModel"]


@dataclass(frozen=True)
class Cause:
    """One hidden state with its probability weight."""

    id: str
    weight: Prob


@dataclass(frozen=True)
class ResponseFunction:
    """One party's outcome distributions, keyed by (setting index, cause id)."""

    party: Party
    table: dict[tuple[int, str], tuple[Prob, ...]]

    def __post_init__(self) -> None:
        frozen = {key: tuple(row) for key, row in self.table.items()}
        object.__setattr__(self, "table", frozen)

    def outcome_probs(self, setting: int, cause_id: str) -> tuple[Prob, ...]:
        try:
            return self.table[(setting, cause_id)]
        except KeyError:
            raise ModelError(
                f"{self.party} response undefined for setting {setting}, "
                f"cause {cause_id!r}",
                code="MODEL_INVALID",
            ) from None


def deterministic_row(n_outcomes: int, outcome: int) -> tuple[Fraction, ...]:
    """Distribution putting all mass on one 1-based outcome index."""
    if not 1 <= outcome <= n_outcomes:
        raise ModelError(
            f"outcome {outcome} out of range 1..{n_outcomes}", code="MODEL_INVALID"
        )
    return tuple(
        Fraction(1) if i == outcome else Fraction(0)
        for i in range(1, n_outcomes + 1)
    )


@dataclass(frozen=True)
class NonContextualModel:
    """One cause set shared by all contexts, with per-party responses."""

    scenario: Scenario
    causes: tuple[Cause, ...]
    alice_response: ResponseFunction
    bob_response: ResponseFunction

    def __post_init__(self) -> None:
        object.__setattr__(self, "causes", tuple(self.causes))

    def cause(self, cause_id: str) -> Cause:
        for cause in self.causes:
            if cause.id == cause_id:
                return cause
        raise ModelError(f"no cause {cause_id!r} in model", code="UNKNOWN_CAUSE")


@dataclass(frozen=True)
class ContextBlock:
    """Cause set and responses private to one context."""

    causes: tuple[Cause, ...]
    alice_response: ResponseFunction
    bob_response: ResponseFunction

    def __post_init__(self) -> None:
        object.__setattr__(self, "causes", tuple(self.causes))


@dataclass(frozen=True)
class ContextualModel:
    """A separate weighted cause set per context."""

    scenario: Scenario
    blocks: dict[Context, ContextBlock]

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", dict(self.blocks))


def _check_causes(causes: Sequence[Cause], where: str) -> None:
    if not causes:
        raise ModelError(f"{where}: empty cause set", code="MODEL_INVALID")
    ids = [c.id for c in causes]
    if len(set(ids)) != len(ids):
        raise ModelError(f"{where}: duplicate cause ids {ids}", code="MODEL_INVALID")
    total: Prob = Fraction(0)
    for cause in causes:
        if cause.weight < 0:
            raise ModelError(
                f"{where}: negative weight for cause {cause.id!r}",
                code="MODEL_INVALID",
            )
        total = total + cause.weight
    if all(is_exact(c.weight) for c in causes):
        if total != 1:
            raise ModelError(
                f"{where}: cause weights sum to {total}, expected 1",
                code="MODEL_INVALID",
            )
    elif abs(total - 1) > FLOAT_ATOL:
        raise ModelError(
            f"{where}: cause weights sum to {total!r}, expected 1",
            code="MODEL_INVALID",
        )


def _check_response_row(
    response: ResponseFunction,
    setting: int,
    cause_id: str,
    n_outcomes: int,
    where: str,
) -> None:
    row = response.outcome_probs(setting, cause_id)
    if len(row) != n_outcomes:
        raise ModelError(
            f"{where}: {response.party} row for setting {setting}, cause "
            f"{cause_id!r} has {len(row)} entries, expected {n_outcomes}",
            code="MODEL_INVALID",
        )
    total: Prob = Fraction(0)
    for value in row:
        if value < 0:
            raise ModelError(
                f"{where}: negative response probability for cause {cause_id!r}",
                code="MODEL_INVALID",
            )
        total = total + value
    if all(is_exact(v) for v in row):
        if total != 1:
            raise ModelError(
                f"{where}: {response.party} row for setting {setting}, cause "
                f"{cause_id!r} sums to {total}",
                code="MODEL_INVALID",
            )
    elif abs(total - 1) > FLOAT_ATOL:
        raise ModelError(
            f"{where}: {response.party} row for setting {setting}, cause "
            f"{cause_id!r} sums to {total!r}",
            code="MODEL_INVALID",
        )


def validate_noncontextual(model: NonContextualModel) -> NonContextualModel:
    """Raise ``ModelError`` unless the model is fully specified and normalized."""
    _check_causes(model.causes, "model")
    scenario = model.scenario
    for cause in model.causes:
        for x, n in enumerate(scenario.alice_outcomes):
            _check_response_row(model.alice_response, x, cause.id, n, "model")
        for y, n in enumerate(scenario.bob_outcomes):
            _check_response_row(model.bob_response, y, cause.id, n, "model")
    return model


def validate_contextual(model: ContextualModel) -> ContextualModel:
    """Raise ``ModelError`` unless every context block is complete and normalized."""
    scenario = model.scenario
    for ctx in scenario.contexts():
        block = model.blocks.get(ctx)
        where = f"context {ctx.label(scenario)}"
        if block is None:
            raise ModelError(f"missing block for {where}", code="MODEL_INVALID")
        _check_causes(block.causes, where)
        na = scenario.alice_outcomes[ctx.alice]
        nb = scenario.bob_outcomes[ctx.bob]
        for cause in block.causes:
            _check_response_row(block.alice_response, ctx.alice, cause.id, na, where)
            _check_response_row(block.bob_response, ctx.bob, cause.id, nb, where)
    for ctx in model.blocks:
        if ctx not in set(scenario.contexts()):
            raise ModelError(
                f"block for unknown context ({ctx.alice},{ctx.bob})",
                code="MODEL_INVALID",
            )
    return model


def validate_model(model: Model) -> Model:
    if isinstance(model, NonContextualModel):
        return validate_noncontextual(model)
    return validate_contextual(model)


def _product_grid(
    alice_row: tuple[Prob, ...], bob_row: tuple[Prob, ...]
) -> tuple[tuple[Prob, ...], ...]:
    return tuple(tuple(pa * pb for pb in bob_row) for pa in alice_row)


def exact_behavior_noncontextual(model: NonContextualModel) -> Behavior:
    """Cause-weighted mixture of per-cause product tables; exact on exact input."""
    validate_noncontextual(model)
    scenario = model.scenario
    table: dict[Context, tuple[tuple[Prob, ...], ...]] = {}
    for ctx in scenario.contexts():
        na = scenario.alice_outcomes[ctx.alice]
        nb = scenario.bob_outcomes[ctx.bob]
        cells = [[Fraction(0) for _ in range(nb)] for _ in range(na)]
        for cause in model.causes:
            ra = model.alice_response.outcome_probs(ctx.alice, cause.id)
            rb = model.bob_response.outcome_probs(ctx.bob, cause.id)
            for a in range(na):
                if ra[a] == 0:
                    continue
                wa = cause.weight * ra[a]
                for b in range(nb):
                    cells[a][b] = cells[a][b] + wa * rb[b]
        table[ctx] = tuple(tuple(row) for row in cells)
    return Behavior(scenario, table)


def exact_behavior_contextual(model: ContextualModel) -> Behavior:
    """Per-context cause mixtures; each context uses its own cause set."""
    validate_contextual(model)
    scenario = model.scenario
    table: dict[Context, tuple[tuple[Prob, ...], ...]] = {}
    for ctx in scenario.contexts():
        block = model.blocks[ctx]
        na = scenario.alice_outcomes[ctx.alice]
        nb = scenario.bob_outcomes[ctx.bob]
        cells = [[Fraction(0) for _ in range(nb)] for _ in range(na)]
        for cause in block.causes:
            ra = block.alice_response.outcome_probs(ctx.alice, cause.id)
            rb = block.bob_response.outcome_probs(ctx.bob, cause.id)
            for a in range(na):
                if ra[a] == 0:
                    continue
                wa = cause.weight * ra[a]
                for b in range(nb):
                    cells[a][b] = cells[a][b] + wa * rb[b]
        table[ctx] = tuple(tuple(row) for row in cells)
    return Behavior(scenario, table)


def exact_behavior(model: Model) -> Behavior:
    """Dispatch to the right exact-behavior computation for the model family."""
    if isinstance(model, NonContextualModel):
        return exact_behavior_noncontextual(model)
    return exact_behavior_contextual(model)


def condition_on_cause(model: NonContextualModel, cause_id: str) -> Behavior:
    """Behavior with one cause held fixed: a product table in every context."""
    validate_noncontextual(model)
    model.cause(cause_id)
    scenario = model.scenario
    table = {
        ctx: _product_grid(
            model.alice_response.outcome_probs(ctx.alice, cause_id),
            model.bob_response.outcome_probs(ctx.bob, cause_id),
        )
        for ctx in scenario.contexts()
    }
    return Behavior(scenario, table)


# ---------------------------------------------------------------------------
# Canonical instances
# ---------------------------------------------------------------------------

# Hidden states as (handkerchief pink?, pink sock on left foot?).
_WARDROBE_STATES: tuple[tuple[str, bool, bool], ...] = (
    ("lambda1", True, True),
    ("lambda2", True, False),
    ("lambda3", False, False),
    ("lambda4", False, True),
)


def socks_on() -> NonContextualModel:
    """Four equal-weight hidden states fixed before any question is asked.

    The subject dressed in the morning: the two handkerchiefs share a color
    (pink with probability 1/2) and the pink sock went on the left or right
    foot with probability 1/2.  Setting ``A`` asks whether the left
    handkerchief is pink, ``A'`` whether left handkerchief and left sock
    match (both pink or both non-pink); ``B``/``B'`` ask the same on the
    right.  Outcome index 1 is the affirmative answer.
    """
    scenario = Scenario.binary(("A", "A'"), ("B", "B'"))
    causes = tuple(Cause(name, Fraction(1, 4)) for name, _, _ in _WARDROBE_STATES)
    alice: dict[tuple[int, str], tuple[Prob, ...]] = {}
    bob: dict[tuple[int, str], tuple[Prob, ...]] = {}
    for name, hand_pink, pink_left in _WARDROBE_STATES:
        pink_right = not pink_left
        alice[(0, name)] = deterministic_row(2, 1 if hand_pink else 2)
        alice[(1, name)] = deterministic_row(2, 1 if hand_pink == pink_left else 2)
        bob[(0, name)] = deterministic_row(2, 1 if hand_pink else 2)
        bob[(1, name)] = deterministic_row(2, 1 if hand_pink == pink_right else 2)
    return NonContextualModel(
        scenario,
        causes,
        ResponseFunction("alice", alice),
        ResponseFunction("bob", bob),
    )


def _two_cause_block(
    alice_setting: int,
    bob_setting: int,
    prefix: str,
    alice_outcome: Callable[..., int],
    bob_outcome: Callable[..., int],
) -> ContextBlock:
    """Block driven by the handkerchief coin alone: one cause per color."""
    causes = (
        Cause(f"{prefix}1", Fraction(1, 2)),
        Cause(f"{prefix}2", Fraction(1, 2)),
    )
    alice: dict[tuple[int, str], tuple[Prob, ...]] = {}
    bob: dict[tuple[int, str], tuple[Prob, ...]] = {}
    for cause, hand_pink in zip(causes, (True, False)):
        alice[(alice_setting, cause.id)] = deterministic_row(2, alice_outcome(hand_pink))
        bob[(bob_setting, cause.id)] = deterministic_row(2, bob_outcome(hand_pink))
    return ContextBlock(
        causes, ResponseFunction("alice", alice), ResponseFunction("bob", bob)
    )


def _four_cause_block(
    alice_setting: int,
    bob_setting: int,
    alice_outcome: Callable[..., int],
    bob_outcome: Callable[..., int],
) -> ContextBlock:
    """Block driven by handkerchief coin x attention coin (pink-sock foot)."""
    causes = tuple(Cause(name, Fraction(1, 4)) for name, _, _ in _WARDROBE_STATES)
    alice: dict[tuple[int, str], tuple[Prob, ...]] = {}
    bob: dict[tuple[int, str], tuple[Prob, ...]] = {}
    for name, hand_pink, pink_left in _WARDROBE_STATES:
        alice[(alice_setting, name)] = deterministic_row(
            2, alice_outcome(hand_pink, pink_left)
        )
        bob[(bob_setting, name)] = deterministic_row(
            2, bob_outcome(hand_pink, pink_left)
        )
    return ContextBlock(
        causes, ResponseFunction("alice", alice), ResponseFunction("bob", bob)
    )


def socks_off() -> ContextualModel:
    """Per-context causes actualized by the joint question itself.

    The subject starts with bare feet and both socks in a briefcase; a
    correlation question (``A'`` or ``B'``) makes them dress on the spot,
    pink sock first on the foot currently attended to:

    * ``(A,B)``: no sock question; only the handkerchief coin acts.
    * ``(A',B)``: Alice's question pulls the pink sock onto the left foot.
    * ``(A,B')``: mirror image, the pink sock lands on the right foot.
    * ``(A',B')``: questions from both sides; a fair attention coin picks
      the pink-sock foot, jointly with the handkerchief coin.

    The resulting behavior reaches the algebraic CHSH maximum of 4 while its
    marginals stay independent of the co-party setting.
    """
    scenario = Scenario.binary(("A", "A'"), ("B", "B'"))

    def hand(hand_pink: bool) -> int:
        return 1 if hand_pink else 2

    blocks = {
        Context(0, 0): _two_cause_block(0, 0, "mu", hand, hand),
        Context(1, 0): _two_cause_block(
            # Pink sock forced left: left sock pink, so A' asks hand == pink.
            1,
            0,
            "nu",
            lambda hand_pink: 1 if hand_pink else 2,
            hand,
        ),
        Context(0, 1): _two_cause_block(
            # Pink sock forced right: B' asks hand == pink on the right.
            0,
            1,
            "sigma",
            hand,
            lambda hand_pink: 1 if hand_pink else 2,
        ),
        Context(1, 1): _four_cause_block(
            1,
            1,
            lambda hand_pink, pink_left: 1 if hand_pink == pink_left else 2,
            lambda hand_pink, pink_left: 1 if hand_pink == (not pink_left) else 2,
        ),
    }
    return ContextualModel(scenario, blocks)


def socks_color() -> ContextualModel:
    """Variant whose second settings ask for the sock color itself.

    ``A''`` asks whether the left sock is pink, ``B''`` whether the right
    sock is pink.  A sock question from exactly one side pulls the pink sock
    onto that side; sock questions from both sides trigger the fair
    attention coin.  The handkerchief coin acts independently throughout.

    Under these dynamics one party's sock-color statistics depend on whether
    the other party asked a sock question, so the marginal (no-signaling)
    laws are violated with residual 1/2, while the maximal CHSH value over
    sign arrangements is 2.  See the README for why this model is shipped
    with the signaling behavior reported as computed.
    """
    scenario = Scenario.binary(("A", "A''"), ("B", "B''"))

    def hand(hand_pink: bool) -> int:
        return 1 if hand_pink else 2

    blocks = {
        Context(0, 0): _two_cause_block(0, 0, "mu", hand, hand),
        Context(1, 0): _two_cause_block(
            # Alice's sock question pulls the pink sock left: A'' always pink.
            1,
            0,
            "nu",
            lambda hand_pink: 1,
            hand,
        ),
        Context(0, 1): _two_cause_block(
            # Bob's sock question pulls the pink sock right: B'' always pink.
            0,
            1,
            "sigma",
            hand,
            lambda hand_pink: 1,
        ),
        Context(1, 1): _four_cause_block(
            1,
            1,
            lambda hand_pink, pink_left: 1 if pink_left else 2,
            lambda hand_pink, pink_left: 2 if pink_left else 1,
        ),
    }
    return ContextualModel(scenario, blocks)


# ---------------------------------------------------------------------------
# Quantum behavior generator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuantumDirections:
    """Measurement angles (radians) in a shared plane, one per setting."""

    alice_angles: tuple[float, ...]
    bob_angles: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "alice_angles", tuple(float(a) for a in self.alice_angles))
        object.__setattr__(self, "bob_angles", tuple(float(a) for a in self.bob_angles))
        for angle in self.alice_angles + self.bob_angles:
            if not math.isfinite(angle):
                raise ModelError(
                    f"measurement angle must be finite, got {angle!r}",
                    code="ANGLES_MISSING",
                )


def _primed_labels(base: str, count: int) -> tuple[str, ...]:
    return tuple(base + "'" * i for i in range(count))


def singlet_behavior(
    directions: QuantumDirections, scenario: Scenario | None = None
) -> Behavior:
    """Joint outcome table for the rotationally invariant two-spin zero state.

    Measuring the total-spin-zero state of two spin-1/2 entities along
    coplanar directions at angles theta (Alice) and phi (Bob) gives

        P(a, b | theta, phi) = (1 - sign(a) * sign(b) * cos(theta - phi)) / 4

    for outcome indices a, b in {1, 2} with sign(1) = +1, sign(2) = -1.
    Depends only on angle differences, so a common rotation of all
    directions leaves the table unchanged.  Entries are floats.
    """
    if scenario is None:
        scenario = Scenario.binary(
            _primed_labels("A", len(directions.alice_angles)),
            _primed_labels("B", len(directions.bob_angles)),
        )
    if len(directions.alice_angles) != len(scenario.alice_settings) or len(
        directions.bob_angles
    ) != len(scenario.bob_settings):
        raise ModelError(
            "need one angle per setting: got "
            f"{len(directions.alice_angles)}/{len(scenario.alice_settings)} for "
            f"alice, {len(directions.bob_angles)}/{len(scenario.bob_settings)} "
            "for bob",
            code="ANGLES_MISSING",
        )
    if set(scenario.alice_outcomes) != {2} or set(scenario.bob_outcomes) != {2}:
        raise ModelError(
            "spin measurements are two-outcome; scenario has other counts",
            code="ANGLES_MISSING",
        )
    table: dict[Context, tuple[tuple[Prob, ...], ...]] = {}
    for ctx in scenario.contexts():
        c = math.cos(directions.alice_angles[ctx.alice] - directions.bob_angles[ctx.bob])
        table[ctx] = (
            ((1.0 - c) / 4.0, (1.0 + c) / 4.0),
            ((1.0 + c) / 4.0, (1.0 - c) / 4.0),
        )
    return Behavior(scenario, table)


def singlet_optimal_directions() -> QuantumDirections:
    """Angle choice reaching the maximal quantum CHSH value 2*sqrt(2)."""
    return QuantumDirections((0.0, math.pi / 2), (math.pi / 4, 3 * math.pi / 4))


# ---------------------------------------------------------------------------
# Seeded random models (property-test support)
# ---------------------------------------------------------------------------


def random_noncontextual_model(
    rand: random.Random,
    *,
    max_causes: int = 8,
    denominator: int = 64,
) -> NonContextualModel:
    """Random exact-rational model over the standard 2x2 binary scenario.

    Cause count is uniform on 1..max_causes; weights are integer multiples
    of 1/denominator (normalized exactly); each response row is
    deterministic with probability 1/2, otherwise a random rational
    distribution.  Every value is a Fraction, so downstream checks such as
    the CHSH bound can assert exact results.
    """
    scenario = Scenario.binary(("A", "A'"), ("B", "B'"))
    n_causes = rand.randint(1, max_causes)
    raw = [rand.randint(1, denominator) for _ in range(n_causes)]
    total = sum(raw)
    causes = tuple(
        Cause(f"c{i + 1}", Fraction(raw[i], total)) for i in range(n_causes)
    )

    def random_distribution(n: int) -> tuple[Fraction, ...]:
        if rand.random() < 0.5:
            return deterministic_row(n, rand.randint(1, n))
        parts = [rand.randint(1, denominator) for _ in range(n)]
        s = sum(parts)
        return tuple(Fraction(p, s) for p in parts)

    alice: dict[tuple[int, str], tuple[Prob, ...]] = {}
    bob: dict[tuple[int, str], tuple[Prob, ...]] = {}
    for cause in causes:
        for x, n in enumerate(scenario.alice_outcomes):
            alice[(x, cause.id)] = random_distribution(n)
        for y, n in enumerate(scenario.bob_outcomes):
            bob[(y, cause.id)] = random_distribution(n)
    return NonContextualModel(
        scenario,
        causes,
        ResponseFunction("alice", alice),
        ResponseFunction("bob", bob),
    )
