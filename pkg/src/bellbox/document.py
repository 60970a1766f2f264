"""The ``.bellbox`` declarative text format: parser, serializer, builtins.

A document is line-oriented 8-bit clean text.  It opens with the version
header ``bellbox-format 1``, contains a ``[scenario]`` section, exactly one
payload section (``[behavior]``, ``[noncontextual]``, ``[contextual]`` or
``[singlet]``), and optionally ``[metadata]``.  ``#`` starts a comment when
it begins the line or follows whitespace.  The full grammar lives in
``docs/format.md``.

Parsing is total: malformed input produces :class:`ParseDiagnostic` entries
with line and column positions, never an exception.  Serialization is
canonical (fixed section order, sorted keys, reduced rationals, contexts in
lexicographic order) and idempotent, and ``parse(serialize(d))`` returns a
structurally equal document.

Probability literals are rationals ``p/q`` or decimals.  In the default
exact mode a decimal is converted to a rational with denominator at most
10**6 and a NOTE diagnostic records the conversion; a behavior section may
instead declare ``numbers = float``, in which case its literals are floats
and round-trip exactly through ``repr``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import UnknownBuiltinError
from .models import (
    Cause,
    ContextBlock,
    ContextualModel,
    NonContextualModel,
    QuantumDirections,
    ResponseFunction,
    exact_behavior,
    singlet_behavior,
    socks_color,
    socks_off,
    socks_on,
)
from .scenario import FLOAT_ATOL, Behavior, Context, Prob, Scenario

FORMAT_VERSION = 1
FILE_EXTENSION = ".bellbox"

#: Denominator cap when decimal literals are converted to rationals.
DECIMAL_DENOMINATOR = 10**6

_SECTION_NAMES = ("metadata", "scenario", "behavior", "noncontextual", "contextual", "singlet")
_PAYLOAD_NAMES = ("behavior", "noncontextual", "contextual", "singlet")

_LABEL_RE = re.compile(r"[A-Za-z0-9_'\"\.\+\-]+")
_KEYVALUE_RE = re.compile(r"^\s*([A-Za-z][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")
_SECTION_RE = re.compile(r"^\s*\[([A-Za-z]+)\]\s*$")
_PROW_RE = re.compile(
    r"^\s*P\(\s*(\d+)\s*,\s*(\d+)\s*\|\s*([^\s,()|=#]+)\s*,\s*([^\s,()|=#]+)\s*\)"
    r"\s*=\s*(\S+)\s*$"
)
_RATIONAL_RE = re.compile(r"^([+-]?\d+)/(\d+)$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_DECIMAL_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")


@dataclass(frozen=True)
class ParseDiagnostic:
    """One parser message; ``line``/``column`` are 1-based source positions."""

    severity: str  # "error" | "note"
    line: int
    column: int
    message: str
    token: str = ""

    def render(self) -> str:
        tail = f" near {self.token!r}" if self.token else ""
        return f"{self.severity}:{self.line}:{self.column}: {self.message}{tail}"


@dataclass(frozen=True)
class SingletSpec:
    """Measurement angles stored in degrees (exact through serialization)."""

    alice_angles_deg: tuple[float, ...]
    bob_angles_deg: tuple[float, ...]

    def directions(self) -> QuantumDirections:
        return QuantumDirections(
            tuple(math.radians(a) for a in self.alice_angles_deg),
            tuple(math.radians(a) for a in self.bob_angles_deg),
        )


@dataclass(frozen=True)
class ModelDocument:
    """Parsed document: scenario plus exactly one payload."""

    scenario: Scenario
    version: int = FORMAT_VERSION
    name: str | None = None
    description: str | None = None
    behavior: Behavior | None = None
    noncontextual: NonContextualModel | None = None
    contextual: ContextualModel | None = None
    singlet: SingletSpec | None = None

    def __post_init__(self) -> None:
        payloads = [
            p
            for p in (self.behavior, self.noncontextual, self.contextual, self.singlet)
            if p is not None
        ]
        if len(payloads) != 1:
            raise ValueError("document needs exactly one payload section")

    @property
    def kind(self) -> str:
        if self.behavior is not None:
            return "behavior"
        if self.noncontextual is not None:
            return "noncontextual"
        if self.contextual is not None:
            return "contextual"
        return "singlet"

    def model(self) -> NonContextualModel | ContextualModel | None:
        """The cause model carried by this document, if any."""
        if self.noncontextual is not None:
            return self.noncontextual
        return self.contextual

    def to_behavior(self) -> Behavior:
        """The behavior this document denotes (computed for model payloads)."""
        if self.behavior is not None:
            return self.behavior
        if self.singlet is not None:
            return singlet_behavior(self.singlet.directions(), self.scenario)
        model = self.model()
        assert model is not None
        return exact_behavior(model)


@dataclass
class ParseResult:
    document: ModelDocument | None
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.document is not None

    def errors(self) -> list[ParseDiagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _comment_start(line: str) -> int:
    for i, ch in enumerate(line):
        if ch == "#" and (i == 0 or line[i - 1].isspace()):
            return i
    return len(line)


def _tokens(text: str, offset: int = 0) -> list[tuple[str, int]]:
    """Whitespace-separated tokens with their 1-based column positions."""
    return [(m.group(), offset + m.start() + 1) for m in re.finditer(r"\S+", text)]


class _DocParser:
    def __init__(self, text: str) -> None:
        self.diags: list[ParseDiagnostic] = []
        self.lines = text.splitlines()

    def error(self, line: int, column: int, message: str, token: str = "") -> None:
        self.diags.append(ParseDiagnostic("error", line, column, message, token))

    def note(self, line: int, column: int, message: str, token: str = "") -> None:
        self.diags.append(ParseDiagnostic("note", line, column, message, token))

    def has_errors(self) -> bool:
        return any(d.severity == "error" for d in self.diags)

    # -- numeric literals ---------------------------------------------------

    def parse_probability(
        self, token: str, line: int, column: int, *, as_float: bool
    ) -> Prob | None:
        """Rational/decimal literal; None (with a diagnostic) when malformed."""
        m = _RATIONAL_RE.match(token)
        if m:
            denominator = int(m.group(2))
            if denominator == 0:
                self.error(line, column, "SYNTAX: zero denominator", token)
                return None
            value = Fraction(int(m.group(1)), denominator)
            return float(value) if as_float else value
        if _INT_RE.match(token):
            return float(token) if as_float else Fraction(int(token))
        if _DECIMAL_RE.match(token):
            value = float(token)
            if not math.isfinite(value):
                self.error(line, column, "SYNTAX: number out of range", token)
                return None
            if as_float:
                return value
            snapped = Fraction(value).limit_denominator(DECIMAL_DENOMINATOR)
            self.note(
                line,
                column,
                f"decimal literal converted to rational {snapped}",
                token,
            )
            return snapped
        self.error(line, column, "SYNTAX: expected a probability literal", token)
        return None

    def parse_float(self, token: str, line: int, column: int) -> float | None:
        m = _RATIONAL_RE.match(token)
        if m:
            if int(m.group(2)) == 0:
                self.error(line, column, "SYNTAX: zero denominator", token)
                return None
            return int(m.group(1)) / int(m.group(2))
        if _DECIMAL_RE.match(token):
            value = float(token)
            if math.isfinite(value):
                return value
            self.error(line, column, "SYNTAX: number out of range", token)
            return None
        self.error(line, column, "SYNTAX: expected a number", token)
        return None

    def parse_label(self, token: str, line: int, column: int) -> str | None:
        if _LABEL_RE.fullmatch(token):
            return token
        self.error(line, column, "SYNTAX: invalid label", token)
        return None


def parse_document(text: str) -> ParseResult:
    """Parse a document; never raises on malformed input.

    On failure ``ParseResult.document`` is None and ``diagnostics`` explains
    why; NOTE-level entries (e.g. decimal conversions) can accompany success.
    """
    p = _DocParser(text)
    sections = _split_sections(p)
    if sections is None or p.has_errors():
        return ParseResult(None, p.diags)

    metadata = _build_metadata(p, sections.get("metadata", []))
    scenario_lines = sections.get("scenario")
    if scenario_lines is None:
        p.error(1, 1, "SYNTAX: missing [scenario] section")
        return ParseResult(None, p.diags)
    scenario = _build_scenario(p, scenario_lines)

    present = [name for name in _PAYLOAD_NAMES if name in sections]
    if len(present) != 1:
        p.error(
            1,
            1,
            "SYNTAX: document needs exactly one of "
            "[behavior], [noncontextual], [contextual], [singlet]; "
            f"found {len(present)}",
        )
        return ParseResult(None, p.diags)

    if scenario is None or p.has_errors():
        return ParseResult(None, p.diags)

    kind = present[0]
    builders: dict[str, Callable] = {
        "behavior": _build_behavior,
        "noncontextual": _build_noncontextual,
        "contextual": _build_contextual,
        "singlet": _build_singlet,
    }
    payload = builders[kind](p, scenario, sections[kind])
    if payload is None or p.has_errors():
        return ParseResult(None, p.diags)

    document = ModelDocument(
        scenario=scenario,
        name=metadata.get("name"),
        description=metadata.get("description"),
        **{kind: payload},
    )
    return ParseResult(document, p.diags)


_Line = tuple[int, str]  # (1-based line number, content with comments removed)


def _split_sections(p: _DocParser) -> dict[str, list[_Line]] | None:
    content: list[_Line] = []
    for i, raw in enumerate(p.lines, start=1):
        stripped = raw[: _comment_start(raw)]
        if stripped.strip():
            content.append((i, stripped))
    if not content:
        p.error(1, 1, "SYNTAX: empty document")
        return None

    header_line, header_text = content[0]
    tokens = _tokens(header_text)
    if len(tokens) != 2 or tokens[0][0] != "bellbox-format":
        p.error(
            header_line,
            tokens[0][1] if tokens else 1,
            "SYNTAX: expected version header 'bellbox-format 1'",
            tokens[0][0] if tokens else "",
        )
        return None
    if not _INT_RE.match(tokens[1][0]) or int(tokens[1][0]) != FORMAT_VERSION:
        p.error(
            header_line,
            tokens[1][1],
            f"VERSION_UNSUPPORTED: this reader handles version {FORMAT_VERSION}",
            tokens[1][0],
        )
        return None

    sections: dict[str, list[_Line]] = {}
    current: list[_Line] | None = None
    for line_no, text in content[1:]:
        m = _SECTION_RE.match(text)
        if m:
            name = m.group(1)
            column = text.index("[") + 1
            if name not in _SECTION_NAMES:
                p.error(line_no, column, "SYNTAX: unknown section", f"[{name}]")
                current = []  # swallow the body of the unknown section
                continue
            if name in sections:
                p.error(line_no, column, "SYNTAX: duplicate section", f"[{name}]")
                current = []
                continue
            sections[name] = []
            current = sections[name]
            continue
        if current is None:
            tok = _tokens(text)[0]
            p.error(line_no, tok[1], "SYNTAX: content before any section", tok[0])
            continue
        current.append((line_no, text))
    return sections


def _build_metadata(p: _DocParser, lines: list[_Line]) -> dict[str, str]:
    out: dict[str, str] = {}
    for line_no, text in lines:
        m = _KEYVALUE_RE.match(text)
        if not m:
            tok = _tokens(text)[0]
            p.error(line_no, tok[1], "SYNTAX: expected 'key = value'", tok[0])
            continue
        key, value = m.group(1), m.group(2)
        if key not in ("name", "description"):
            p.error(line_no, m.start(1) + 1, "SYNTAX: unknown metadata key", key)
            continue
        if key in out:
            p.error(line_no, m.start(1) + 1, "SYNTAX: duplicate metadata key", key)
            continue
        out[key] = value
    return out


def _build_scenario(p: _DocParser, lines: list[_Line]) -> Scenario | None:
    first_line = lines[0][0] if lines else 1
    raw: dict[str, tuple[int, int, str]] = {}
    for line_no, text in lines:
        m = _KEYVALUE_RE.match(text)
        if not m:
            tok = _tokens(text)[0]
            p.error(line_no, tok[1], "SYNTAX: expected 'key = value'", tok[0])
            continue
        key = m.group(1)
        if key not in ("alice", "bob", "alice_outcomes", "bob_outcomes"):
            p.error(line_no, m.start(1) + 1, "SYNTAX: unknown scenario key", key)
            continue
        if key in raw:
            p.error(line_no, m.start(1) + 1, "SYNTAX: duplicate scenario key", key)
            continue
        raw[key] = (line_no, m.start(2) + 1, m.group(2))

    settings: dict[str, tuple[str, ...]] = {}
    for key in ("alice", "bob"):
        if key not in raw:
            p.error(first_line, 1, f"SYNTAX: scenario needs '{key} = <labels>'")
            continue
        line_no, column, value = raw[key]
        labels = []
        for tok, col in _tokens(value, column - 1):
            label = p.parse_label(tok, line_no, col)
            if label is not None:
                if label in labels:
                    p.error(line_no, col, "SYNTAX: duplicate setting label", label)
                else:
                    labels.append(label)
        if labels:
            settings[key] = tuple(labels)
        else:
            p.error(line_no, column, f"SYNTAX: {key} needs at least one setting")

    counts: dict[str, tuple[int, ...]] = {}
    for key, party in (("alice_outcomes", "alice"), ("bob_outcomes", "bob")):
        if party not in settings:
            continue
        if key not in raw:
            counts[party] = (2,) * len(settings[party])
            continue
        line_no, column, value = raw[key]
        parsed = []
        for tok, col in _tokens(value, column - 1):
            if not _INT_RE.match(tok) or int(tok) < 2:
                p.error(line_no, col, "SYNTAX: outcome counts are integers >= 2", tok)
            else:
                parsed.append(int(tok))
        if len(parsed) != len(settings[party]):
            p.error(
                line_no,
                column,
                f"SYNTAX: {key} needs one count per {party} setting "
                f"({len(settings[party])})",
            )
        else:
            counts[party] = tuple(parsed)

    if p.has_errors() or "alice" not in settings or "bob" not in settings:
        return None
    return Scenario(settings["alice"], settings["bob"], counts["alice"], counts["bob"])


def _build_behavior(
    p: _DocParser, scenario: Scenario, lines: list[_Line]
) -> Behavior | None:
    as_float = False
    cells: dict[tuple[Context, int, int], Prob] = {}
    cell_pos: dict[Context, tuple[int, int]] = {}
    body: list[_Line] = []
    for line_no, text in lines:
        m = _KEYVALUE_RE.match(text)
        if m and m.group(1) == "numbers":
            if m.group(2) == "float":
                as_float = True
            elif m.group(2) != "exact":
                p.error(
                    line_no,
                    m.start(2) + 1,
                    "SYNTAX: numbers mode is 'exact' or 'float'",
                    m.group(2),
                )
            continue
        body.append((line_no, text))

    for line_no, text in body:
        m = _PROW_RE.match(text)
        if not m:
            tok = _tokens(text)[0]
            p.error(
                line_no,
                tok[1],
                "SYNTAX: expected 'P(a,b | x,y) = value'",
                tok[0],
            )
            continue
        a, b = int(m.group(1)), int(m.group(2))
        x_label, y_label = m.group(3), m.group(4)
        if x_label not in scenario.alice_settings:
            p.error(line_no, m.start(3) + 1, "UNKNOWN_LABEL: not an alice setting", x_label)
            continue
        if y_label not in scenario.bob_settings:
            p.error(line_no, m.start(4) + 1, "UNKNOWN_LABEL: not a bob setting", y_label)
            continue
        ctx = Context(
            scenario.alice_settings.index(x_label),
            scenario.bob_settings.index(y_label),
        )
        if not (1 <= a <= scenario.alice_outcomes[ctx.alice]) or not (
            1 <= b <= scenario.bob_outcomes[ctx.bob]
        ):
            p.error(
                line_no,
                m.start(1) + 1,
                f"SYNTAX: outcome pair ({a},{b}) out of range for context "
                f"{ctx.label(scenario)}",
            )
            continue
        value = p.parse_probability(
            m.group(5), line_no, m.start(5) + 1, as_float=as_float
        )
        if value is None:
            continue
        key = (ctx, a, b)
        if key in cells:
            p.error(
                line_no,
                m.start(1) + 1,
                f"SYNTAX: duplicate entry for P({a},{b} | {x_label},{y_label})",
            )
            continue
        cells[key] = value
        cell_pos.setdefault(ctx, (line_no, 1))

    if p.has_errors():
        return None

    zero: Prob = 0.0 if as_float else Fraction(0)
    table: dict[Context, tuple[tuple[Prob, ...], ...]] = {}
    for ctx in scenario.contexts():
        na = scenario.alice_outcomes[ctx.alice]
        nb = scenario.bob_outcomes[ctx.bob]
        grid = [
            [cells.get((ctx, a, b), zero) for b in range(1, nb + 1)]
            for a in range(1, na + 1)
        ]
        line_no, column = cell_pos.get(ctx, (lines[0][0] if lines else 1, 1))
        total = sum(v for row in grid for v in row)
        negative = any(v < 0 for row in grid for v in row)
        if negative:
            p.error(
                line_no,
                column,
                f"UNNORMALIZED: negative probability in behavior rows for "
                f"context {ctx.label(scenario)}",
            )
        elif (not as_float and total != 1) or (
            as_float and abs(total - 1) > FLOAT_ATOL
        ):
            shown = total if not as_float else repr(total)
            p.error(
                line_no,
                column,
                f"UNNORMALIZED: behavior rows for context {ctx.label(scenario)} "
                f"sum to {shown}",
            )
        table[ctx] = tuple(tuple(row) for row in grid)
    if p.has_errors():
        return None
    return Behavior(scenario, table)


class _CauseAccumulator:
    """Shared cause/respond line handling for model sections."""

    def __init__(self, p: _DocParser, scenario: Scenario, where: str) -> None:
        self.p = p
        self.scenario = scenario
        self.where = where
        self.causes: list[tuple[str, Prob, int]] = []  # (id, weight, line)
        self.rows: dict[tuple[str, int, str], tuple[Prob, ...]] = {}
        # keyed (party, setting index, cause id)

    def on_cause(self, line_no: int, tokens: list[tuple[str, int]]) -> None:
        if len(tokens) != 4 or tokens[2][0] != "weight":
            self.p.error(
                line_no,
                tokens[0][1],
                "SYNTAX: expected 'cause <id> weight <p/q>'",
                tokens[0][0],
            )
            return
        cause_id = self.p.parse_label(tokens[1][0], line_no, tokens[1][1])
        weight = self.p.parse_probability(
            tokens[3][0], line_no, tokens[3][1], as_float=False
        )
        if cause_id is None or weight is None:
            return
        if any(c[0] == cause_id for c in self.causes):
            self.p.error(line_no, tokens[1][1], "SYNTAX: duplicate cause id", cause_id)
            return
        if weight < 0:
            self.p.error(
                line_no, tokens[3][1], f"UNNORMALIZED: negative weight in {self.where}"
            )
            return
        self.causes.append((cause_id, weight, line_no))

    def on_respond(
        self,
        line_no: int,
        tokens: list[tuple[str, int]],
        allowed_settings: dict[str, tuple[int, ...]],
    ) -> None:
        if not self.causes:
            self.p.error(
                line_no,
                tokens[0][1],
                "SYNTAX: 'respond' before any 'cause' line",
                tokens[0][0],
            )
            return
        if len(tokens) < 5 or tokens[3][0] != "->":
            self.p.error(
                line_no,
                tokens[0][1],
                "SYNTAX: expected 'respond <party> <setting> -> <probabilities>'",
                tokens[0][0],
            )
            return
        party_tok, party_col = tokens[1]
        if party_tok not in ("alice", "bob"):
            self.p.error(line_no, party_col, "SYNTAX: party is 'alice' or 'bob'", party_tok)
            return
        label_tok, label_col = tokens[2]
        party_settings = self.scenario.settings(party_tok)  # type: ignore[arg-type]
        if label_tok not in party_settings:
            self.p.error(
                line_no, label_col, f"UNKNOWN_LABEL: not a {party_tok} setting", label_tok
            )
            return
        setting = party_settings.index(label_tok)
        if setting not in allowed_settings[party_tok]:
            self.p.error(
                line_no,
                label_col,
                f"SYNTAX: setting {label_tok} is not part of {self.where}",
                label_tok,
            )
            return
        row: list[Prob] = []
        for tok, col in tokens[4:]:
            value = self.p.parse_probability(tok, line_no, col, as_float=False)
            if value is None:
                return
            row.append(value)
        counts = self.scenario.outcome_counts(party_tok)  # type: ignore[arg-type]
        if len(row) != counts[setting]:
            self.p.error(
                line_no,
                tokens[4][1],
                f"SYNTAX: {party_tok} setting {label_tok} needs "
                f"{counts[setting]} probabilities, got {len(row)}",
            )
            return
        total = sum(row)
        if any(v < 0 for v in row) or total != 1:
            self.p.error(
                line_no,
                tokens[4][1],
                f"UNNORMALIZED: response row sums to {total} in {self.where}",
            )
            return
        cause_id = self.causes[-1][0]
        key = (party_tok, setting, cause_id)
        if key in self.rows:
            self.p.error(
                line_no,
                label_col,
                f"SYNTAX: duplicate response for {party_tok} setting {label_tok} "
                f"under cause {cause_id}",
            )
            return
        self.rows[key] = tuple(row)

    def finish(
        self, section_line: int, allowed_settings: dict[str, tuple[int, ...]]
    ) -> tuple[tuple[Cause, ...], ResponseFunction, ResponseFunction] | None:
        if not self.causes:
            self.p.error(section_line, 1, f"SYNTAX: {self.where} declares no causes")
            return None
        total = sum(w for _, w, _ in self.causes)
        if total != 1:
            self.p.error(
                self.causes[0][2],
                1,
                f"UNNORMALIZED: cause weights in {self.where} sum to {total}",
            )
        for cause_id, _, cause_line in self.causes:
            for party in ("alice", "bob"):
                labels = self.scenario.settings(party)  # type: ignore[arg-type]
                for setting in allowed_settings[party]:
                    if (party, setting, cause_id) not in self.rows:
                        self.p.error(
                            cause_line,
                            1,
                            f"SYNTAX: cause {cause_id} has no response for "
                            f"{party} setting {labels[setting]}",
                        )
        if self.p.has_errors():
            return None
        causes = tuple(Cause(cid, w) for cid, w, _ in self.causes)
        alice = ResponseFunction(
            "alice",
            {
                (setting, cid): row
                for (party, setting, cid), row in self.rows.items()
                if party == "alice"
            },
        )
        bob = ResponseFunction(
            "bob",
            {
                (setting, cid): row
                for (party, setting, cid), row in self.rows.items()
                if party == "bob"
            },
        )
        return causes, alice, bob


def _build_noncontextual(
    p: _DocParser, scenario: Scenario, lines: list[_Line]
) -> NonContextualModel | None:
    acc = _CauseAccumulator(p, scenario, "the cause set")
    allowed = {
        "alice": tuple(range(len(scenario.alice_settings))),
        "bob": tuple(range(len(scenario.bob_settings))),
    }
    for line_no, text in lines:
        tokens = _tokens(text)
        head = tokens[0][0]
        if head == "cause":
            acc.on_cause(line_no, tokens)
        elif head == "respond":
            acc.on_respond(line_no, tokens, allowed)
        else:
            p.error(line_no, tokens[0][1], "SYNTAX: expected 'cause' or 'respond'", head)
    built = acc.finish(lines[0][0] if lines else 1, allowed)
    if built is None:
        return None
    causes, alice, bob = built
    return NonContextualModel(scenario, causes, alice, bob)


def _build_contextual(
    p: _DocParser, scenario: Scenario, lines: list[_Line]
) -> ContextualModel | None:
    open_ctx: Context | None = None
    acc: _CauseAccumulator | None = None
    pending: list[tuple[Context, int, _CauseAccumulator]] = []

    def allowed_for(ctx: Context) -> dict[str, tuple[int, ...]]:
        return {"alice": (ctx.alice,), "bob": (ctx.bob,)}

    for line_no, text in lines:
        tokens = _tokens(text)
        head = tokens[0][0]
        if head == "context":
            if len(tokens) != 3:
                p.error(
                    line_no, tokens[0][1], "SYNTAX: expected 'context <x> <y>'", head
                )
                acc = None
                continue
            x_label, x_col = tokens[1]
            y_label, y_col = tokens[2]
            if x_label not in scenario.alice_settings:
                p.error(line_no, x_col, "UNKNOWN_LABEL: not an alice setting", x_label)
                acc = None
                continue
            if y_label not in scenario.bob_settings:
                p.error(line_no, y_col, "UNKNOWN_LABEL: not a bob setting", y_label)
                acc = None
                continue
            ctx = Context(
                scenario.alice_settings.index(x_label),
                scenario.bob_settings.index(y_label),
            )
            if any(c == ctx for c, _, _ in pending):
                p.error(
                    line_no,
                    x_col,
                    f"SYNTAX: duplicate block for context {ctx.label(scenario)}",
                )
                acc = None
                continue
            open_ctx = ctx
            acc = _CauseAccumulator(p, scenario, f"context {ctx.label(scenario)}")
            pending.append((ctx, line_no, acc))
        elif head == "cause":
            if acc is None:
                p.error(
                    line_no, tokens[0][1], "SYNTAX: 'cause' before any 'context' line"
                )
                continue
            acc.on_cause(line_no, tokens)
        elif head == "respond":
            if acc is None or open_ctx is None:
                p.error(
                    line_no, tokens[0][1], "SYNTAX: 'respond' before any 'context' line"
                )
                continue
            acc.on_respond(line_no, tokens, allowed_for(open_ctx))
        else:
            p.error(
                line_no,
                tokens[0][1],
                "SYNTAX: expected 'context', 'cause' or 'respond'",
                head,
            )

    blocks: dict[Context, ContextBlock] = {}
    for ctx, block_line, block_acc in pending:
        built = block_acc.finish(block_line, allowed_for(ctx))
        if built is None:
            continue
        causes, alice, bob = built
        blocks[ctx] = ContextBlock(causes, alice, bob)
    for ctx in scenario.contexts():
        if not any(c == ctx for c, _, _ in pending):
            p.error(
                lines[0][0] if lines else 1,
                1,
                f"SYNTAX: missing block for context {ctx.label(scenario)}",
            )
    if p.has_errors():
        return None
    return ContextualModel(scenario, blocks)


def _build_singlet(
    p: _DocParser, scenario: Scenario, lines: list[_Line]
) -> SingletSpec | None:
    if set(scenario.alice_outcomes) != {2} or set(scenario.bob_outcomes) != {2}:
        p.error(
            lines[0][0] if lines else 1,
            1,
            "SYNTAX: singlet documents need two-outcome settings",
        )
        return None
    angles: dict[str, tuple[float, ...]] = {}
    for line_no, text in lines:
        m = _KEYVALUE_RE.match(text)
        if not m or m.group(1) not in ("alice_angles_deg", "bob_angles_deg"):
            tok = _tokens(text)[0]
            p.error(
                line_no,
                tok[1],
                "SYNTAX: expected 'alice_angles_deg = ...' or 'bob_angles_deg = ...'",
                tok[0],
            )
            continue
        key = m.group(1)
        if key in angles:
            p.error(line_no, m.start(1) + 1, "SYNTAX: duplicate key", key)
            continue
        values = []
        for tok, col in _tokens(m.group(2), m.start(2)):
            value = p.parse_float(tok, line_no, col)
            if value is not None:
                values.append(value)
        angles[key] = tuple(values)
    for key, party in (("alice_angles_deg", "alice"), ("bob_angles_deg", "bob")):
        expected = len(scenario.settings(party))  # type: ignore[arg-type]
        got = angles.get(key)
        if got is None or len(got) != expected:
            p.error(
                lines[0][0] if lines else 1,
                1,
                f"SYNTAX: {key} needs exactly {expected} angles",
            )
    if p.has_errors():
        return None
    return SingletSpec(angles["alice_angles_deg"], angles["bob_angles_deg"])


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _fmt_prob(value: Prob) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(value)


def serialize_document(document: ModelDocument) -> str:
    """Canonical text form; idempotent and structurally round-trippable."""
    out: list[str] = [f"bellbox-format {FORMAT_VERSION}", ""]
    if document.name is not None or document.description is not None:
        out.append("[metadata]")
        if document.description is not None:
            out.append(f"description = {document.description}")
        if document.name is not None:
            out.append(f"name = {document.name}")
        out.append("")
    scenario = document.scenario
    out.append("[scenario]")
    out.append("alice = " + " ".join(scenario.alice_settings))
    out.append("alice_outcomes = " + " ".join(str(n) for n in scenario.alice_outcomes))
    out.append("bob = " + " ".join(scenario.bob_settings))
    out.append("bob_outcomes = " + " ".join(str(n) for n in scenario.bob_outcomes))
    out.append("")

    if document.behavior is not None:
        out.extend(_serialize_behavior(document.behavior))
    elif document.noncontextual is not None:
        out.append("[noncontextual]")
        model = document.noncontextual
        all_alice = tuple(range(len(scenario.alice_settings)))
        all_bob = tuple(range(len(scenario.bob_settings)))
        out.extend(
            _serialize_causes(
                scenario,
                model.causes,
                model.alice_response,
                model.bob_response,
                all_alice,
                all_bob,
            )
        )
    elif document.contextual is not None:
        out.append("[contextual]")
        model = document.contextual
        for ctx in scenario.contexts():
            block = model.blocks[ctx]
            out.append(
                f"context {scenario.alice_settings[ctx.alice]} "
                f"{scenario.bob_settings[ctx.bob]}"
            )
            out.extend(
                _serialize_causes(
                    scenario,
                    block.causes,
                    block.alice_response,
                    block.bob_response,
                    (ctx.alice,),
                    (ctx.bob,),
                )
            )
    else:
        assert document.singlet is not None
        out.append("[singlet]")
        out.append(
            "alice_angles_deg = "
            + " ".join(repr(a) for a in document.singlet.alice_angles_deg)
        )
        out.append(
            "bob_angles_deg = "
            + " ".join(repr(a) for a in document.singlet.bob_angles_deg)
        )
    out.append("")
    return "\n".join(out)


def _serialize_behavior(behavior: Behavior) -> list[str]:
    out = ["[behavior]"]
    if not behavior.exact:
        out.append("numbers = float")
    scenario = behavior.scenario
    for ctx, a, b, value in behavior.entries():
        x = scenario.alice_settings[ctx.alice]
        y = scenario.bob_settings[ctx.bob]
        out.append(f"P({a},{b} | {x},{y}) = {_fmt_prob(value)}")
    return out


def _serialize_causes(
    scenario: Scenario,
    causes: Iterable[Cause],
    alice: ResponseFunction,
    bob: ResponseFunction,
    alice_settings: Sequence[int],
    bob_settings: Sequence[int],
) -> list[str]:
    out = []
    for cause in causes:
        out.append(f"cause {cause.id} weight {_fmt_prob(cause.weight)}")
        for x in alice_settings:
            row = alice.outcome_probs(x, cause.id)
            out.append(
                f"respond alice {scenario.alice_settings[x]} -> "
                + " ".join(_fmt_prob(v) for v in row)
            )
        for y in bob_settings:
            row = bob.outcome_probs(y, cause.id)
            out.append(
                f"respond bob {scenario.bob_settings[y]} -> "
                + " ".join(_fmt_prob(v) for v in row)
            )
    return out


# ---------------------------------------------------------------------------
# Builtin documents
# ---------------------------------------------------------------------------

BUILTIN_NAMES = ("socks-on", "socks-off", "socks-color", "singlet-optimal")

_BUILTIN_DESCRIPTIONS = {
    "socks-on": (
        "Four equal-weight hidden states fixed before measurement; "
        "local behavior with CHSH maximum 2."
    ),
    "socks-off": (
        "Per-context causes actualized by the joint question; reaches the "
        "algebraic CHSH maximum 4 with no-signaling marginals."
    ),
    "socks-color": (
        "Sock-color questions pull the pink sock to the asking side, or "
        "trigger an attention coin when both sides ask; marginals shift by "
        "1/2 (signaling) and the computed CHSH maximum is 2."
    ),
    "singlet-optimal": (
        "Two-spin zero state measured at the angle set reaching the quantum "
        "CHSH maximum 2*sqrt(2)."
    ),
}


def builtin_document(name: str) -> ModelDocument:
    """One of the shipped canonical documents; UNKNOWN_BUILTIN otherwise."""
    description = _BUILTIN_DESCRIPTIONS.get(name)
    if name == "socks-on":
        model = socks_on()
        return ModelDocument(
            scenario=model.scenario,
            name=name,
            description=description,
            noncontextual=model,
        )
    if name == "socks-off":
        model = socks_off()
        return ModelDocument(
            scenario=model.scenario,
            name=name,
            description=description,
            contextual=model,
        )
    if name == "socks-color":
        model = socks_color()
        return ModelDocument(
            scenario=model.scenario,
            name=name,
            description=description,
            contextual=model,
        )
    if name == "singlet-optimal":
        spec = SingletSpec((0.0, 90.0), (45.0, 135.0))
        return ModelDocument(
            scenario=Scenario.binary(("A", "A'"), ("B", "B'")),
            name=name,
            description=description,
            singlet=spec,
        )
    raise UnknownBuiltinError(
        f"no builtin named {name!r}; available: {', '.join(BUILTIN_NAMES)}"
    )
