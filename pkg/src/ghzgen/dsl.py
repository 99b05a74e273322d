"""Plain-text circuit description language (``.onet`` files).

One statement per line; ``#`` starts a comment.  Grammar:

    set theta 0.01            header values: theta, alpha,
    set alpha 316.23          case_weights (three numbers), noise
    set noise X@1,Z@3         (a channel error spec)
    source pdc2 [weights w1 w2 w3]
    kerr MODE POL UNITS       probe coupling on one rail
    pbs IN1 [IN2] -> OUT_T OUT_R
    bs  IN1 [IN2] -> OUT1 OUT2
    hwp45 MODE
    hwp90 MODE
    route SRC -> DST
    detect NAME = MODE [MODE ...]

``parse`` turns text into a ``DslDocument`` and raises ``ParseError``
(with line, column and an error kind) on anything malformed; it never
raises anything else.  ``elaborate`` checks mode flow, every input must
be a live declared mode and every output a fresh name, and builds the
``CircuitNetwork``.  ``pretty_print`` emits canonical text that reparses
to an equal document.

The ``pdc2`` source emits on the fixed arm names a1, b1 (first pass)
and a2, b2 (second pass).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .network import (
    CircuitNetwork,
    DetectorGroup,
    NetworkSettings,
    SourceSpec,
)
from .elements import make_bs, make_hwp45, make_hwp90, make_pbs, make_route
from .noise import parse_noise_spec
from .qnd import KerrCoupling
from .source import CaseWeights
from .states import H, V

SOURCE_ARMS = ("a1", "b1", "a2", "b2")

ERROR_KINDS = (
    "syntax",
    "unknown-element",
    "mode-reuse",
    "undeclared-mode",
    "bad-parameter",
)

_SET_KEYS = ("theta", "alpha", "case_weights", "noise")
_ELEMENT_HEADS = ("pbs", "bs", "hwp45", "hwp90", "route")
_STATEMENT_HEADS = ("set", "source", "kerr", "detect") + _ELEMENT_HEADS

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ParseError(Exception):
    """Rejection of a circuit description, located at a line and column."""

    def __init__(self, message: str, *, line: int, column: int, kind: str):
        if kind not in ERROR_KINDS:
            raise ValueError(f"unknown error kind {kind!r}")
        super().__init__(f"line {line}, column {column}: {message} [{kind}]")
        self.message = message
        self.line = line
        self.column = column
        self.kind = kind


@dataclass(frozen=True)
class Statement:
    """One parsed line: a head keyword and its typed payload.

    Source positions are carried for error reporting but do not take
    part in equality, so a reparse of canonical text compares equal.
    """

    kind: str
    args: tuple
    line: int = field(compare=False)
    column: int = field(compare=False)


@dataclass(frozen=True)
class DslDocument:
    statements: tuple[Statement, ...]

    def __iter__(self):
        return iter(self.statements)

    def setting(self, key: str):
        for stmt in self.statements:
            if stmt.kind == "set" and stmt.args[0] == key:
                return stmt.args[1]
        return None


@dataclass
class _Token:
    text: str
    column: int


def _tokenize(line: str) -> list[_Token]:
    code = line.split("#", 1)[0]
    return [
        _Token(m.group(), m.start() + 1) for m in re.finditer(r"\S+", code)
    ]


def _fail(message: str, line: int, column: int, kind: str):
    raise ParseError(message, line=line, column=column, kind=kind)


def _float(tok: _Token, line: int) -> float:
    try:
        return float(tok.text)
    except ValueError:
        _fail(f"expected a number, got {tok.text!r}", line, tok.column, "bad-parameter")


def _mode_name(tok: _Token, line: int) -> str:
    if not _NAME_RE.match(tok.text):
        _fail(f"bad mode name {tok.text!r}", line, tok.column, "syntax")
    return tok.text


def _check_statement_dup(names: list[_Token], line: int):
    seen: dict[str, int] = {}
    for tok in names:
        if tok.text in seen:
            _fail(
                f"mode {tok.text!r} appears twice in one statement",
                line,
                tok.column,
                "mode-reuse",
            )
        seen[tok.text] = tok.column


def _parse_set(toks: list[_Token], line: int) -> Statement:
    if len(toks) < 3:
        _fail("set needs a key and a value", line, toks[0].column, "syntax")
    key = toks[1].text
    if key not in _SET_KEYS:
        _fail(
            f"unknown setting {key!r} (expected one of {', '.join(_SET_KEYS)})",
            line,
            toks[1].column,
            "bad-parameter",
        )
    values = toks[2:]
    if key == "case_weights":
        if len(values) != 3:
            _fail("case_weights needs three numbers", line, toks[1].column, "syntax")
        payload = tuple(_float(t, line) for t in values)
    elif key == "noise":
        if len(values) != 1:
            _fail("noise needs one spec token", line, toks[1].column, "syntax")
        payload = values[0].text
    else:
        if len(values) != 1:
            _fail(f"{key} needs one number", line, toks[1].column, "syntax")
        payload = _float(values[0], line)
    return Statement("set", (key, payload), line, toks[0].column)


def _parse_source(toks: list[_Token], line: int) -> Statement:
    if len(toks) < 2:
        _fail("source needs a kind", line, toks[0].column, "syntax")
    kind = toks[1].text
    if kind != "pdc2":
        _fail(f"unknown source kind {kind!r}", line, toks[1].column, "bad-parameter")
    weights = None
    rest = toks[2:]
    if rest:
        if rest[0].text != "weights" or len(rest) != 4:
            _fail(
                "source takes an optional 'weights w1 w2 w3' clause",
                line,
                rest[0].column,
                "syntax",
            )
        weights = tuple(_float(t, line) for t in rest[1:])
    return Statement("source", (kind, weights), line, toks[0].column)


def _parse_kerr(toks: list[_Token], line: int) -> Statement:
    if len(toks) != 4:
        _fail("kerr needs MODE POL UNITS", line, toks[0].column, "syntax")
    mode = _mode_name(toks[1], line)
    pol = toks[2].text
    if pol not in (H, V):
        _fail(f"polarization must be H or V, got {pol!r}", line, toks[2].column, "bad-parameter")
    units = _float(toks[3], line)
    return Statement("kerr", (mode, pol, units), line, toks[0].column)


def _parse_element(head: str, toks: list[_Token], line: int) -> Statement:
    if head in ("hwp45", "hwp90"):
        if len(toks) != 2:
            _fail(f"{head} needs one mode", line, toks[0].column, "syntax")
        mode = _mode_name(toks[1], line)
        return Statement(head, (mode,), line, toks[0].column)
    arrow = [i for i, t in enumerate(toks) if t.text == "->"]
    if len(arrow) != 1:
        _fail(f"{head} needs one '->'", line, toks[0].column, "syntax")
    split = arrow[0]
    ins = toks[1:split]
    outs = toks[split + 1 :]
    if head == "route":
        if len(ins) != 1 or len(outs) != 1:
            _fail("route maps one mode to one mode", line, toks[0].column, "syntax")
    else:
        if len(ins) not in (1, 2) or len(outs) != 2:
            _fail(
                f"{head} takes one or two inputs and exactly two outputs",
                line,
                toks[0].column,
                "syntax",
            )
    names = [*ins, *outs]
    for tok in names:
        _mode_name(tok, line)
    _check_statement_dup(names, line)
    in_modes = tuple(t.text for t in ins)
    out_modes = tuple(t.text for t in outs)
    if head == "route":
        return Statement("route", (in_modes[0], out_modes[0]), line, toks[0].column)
    return Statement(head, (in_modes, out_modes), line, toks[0].column)


def _parse_detect(toks: list[_Token], line: int) -> Statement:
    if len(toks) < 4 or toks[2].text != "=":
        _fail("detect needs 'NAME = MODE...'", line, toks[0].column, "syntax")
    name = toks[1].text
    if not _NAME_RE.match(name):
        _fail(f"bad detector name {name!r}", line, toks[1].column, "syntax")
    modes = toks[3:]
    for tok in modes:
        _mode_name(tok, line)
    _check_statement_dup(modes, line)
    return Statement(
        "detect", (name, tuple(t.text for t in modes)), line, toks[0].column
    )


def parse(text: str) -> DslDocument:
    """Parse circuit text; raises ParseError on any malformed statement."""
    statements: list[Statement] = []
    seen_set_keys: dict[str, int] = {}
    source_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = _tokenize(raw)
        if not toks:
            continue
        head = toks[0].text
        if head not in _STATEMENT_HEADS:
            _fail(f"unknown element {head!r}", lineno, toks[0].column, "unknown-element")
        if head == "set":
            stmt = _parse_set(toks, lineno)
            key = stmt.args[0]
            if key in seen_set_keys:
                _fail(
                    f"setting {key!r} already given on line {seen_set_keys[key]}",
                    lineno,
                    toks[0].column,
                    "syntax",
                )
            seen_set_keys[key] = lineno
        elif head == "source":
            if source_line is not None:
                _fail(
                    f"source already given on line {source_line}",
                    lineno,
                    toks[0].column,
                    "syntax",
                )
            stmt = _parse_source(toks, lineno)
            source_line = lineno
        elif head == "kerr":
            stmt = _parse_kerr(toks, lineno)
        elif head == "detect":
            stmt = _parse_detect(toks, lineno)
        else:
            stmt = _parse_element(head, toks, lineno)
        statements.append(stmt)
    return DslDocument(statements=tuple(statements))


def parse_file(path) -> DslDocument:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


# --- elaboration -----------------------------------------------------------


class _ModeFlow:
    """Tracks which modes exist and which still carry light."""

    def __init__(self):
        self.declared: set[str] = set()
        self.live: set[str] = set()

    def declare(self, mode: str, stmt: Statement, column: int):
        if mode in self.declared:
            _fail(f"mode {mode!r} already defined", stmt.line, column, "mode-reuse")
        self.declared.add(mode)
        self.live.add(mode)

    def consume(self, mode: str, stmt: Statement):
        self.require_live(mode, stmt)
        self.live.discard(mode)

    def require_live(self, mode: str, stmt: Statement):
        if mode not in self.declared:
            _fail(f"mode {mode!r} is not declared", stmt.line, stmt.column, "undeclared-mode")
        if mode not in self.live:
            _fail(f"mode {mode!r} was already used", stmt.line, stmt.column, "mode-reuse")


def elaborate(doc: DslDocument, name: str = "network") -> CircuitNetwork:
    """Check mode flow and build the network.

    Raises ParseError (with the statement's position) on flow violations:
    consuming a mode twice, feeding an element from an undeclared or
    already-consumed mode, redefining an existing mode, or detecting a
    dead mode.
    """
    flow = _ModeFlow()
    elements = []
    couplings = []
    detectors = []
    detector_names: dict[str, int] = {}
    source: SourceSpec | None = None
    settings_kw: dict = {}
    set_weights: tuple | None = None
    source_stmt: Statement | None = None

    for stmt in doc.statements:
        if stmt.kind == "set":
            key, value = stmt.args
            if key == "case_weights":
                set_weights = value
            elif key == "noise":
                try:
                    parse_noise_spec(value)
                except ValueError as exc:
                    _fail(str(exc), stmt.line, stmt.column, "bad-parameter")
                settings_kw["noise"] = value
            else:
                settings_kw[key] = value
        elif stmt.kind == "source":
            source_stmt = stmt
            for arm in SOURCE_ARMS:
                flow.declare(arm, stmt, stmt.column)
        elif stmt.kind == "kerr":
            mode, pol, units = stmt.args
            if mode not in flow.declared:
                _fail(
                    f"mode {mode!r} is not declared",
                    stmt.line,
                    stmt.column,
                    "undeclared-mode",
                )
            couplings.append(KerrCoupling(mode=mode, pol=pol, units=units))
        elif stmt.kind in ("pbs", "bs"):
            ins, outs = stmt.args
            for m in ins:
                flow.consume(m, stmt)
            for m in outs:
                flow.declare(m, stmt, stmt.column)
            maker = make_pbs if stmt.kind == "pbs" else make_bs
            in1 = ins[0]
            in2 = ins[1] if len(ins) == 2 else None
            elements.append(maker(in1, in2, outs[0], outs[1]))
        elif stmt.kind in ("hwp45", "hwp90"):
            (mode,) = stmt.args
            flow.require_live(mode, stmt)
            maker = make_hwp45 if stmt.kind == "hwp45" else make_hwp90
            elements.append(maker(mode))
        elif stmt.kind == "route":
            src, dst = stmt.args
            flow.consume(src, stmt)
            flow.declare(dst, stmt, stmt.column)
            elements.append(make_route(src, dst))
        elif stmt.kind == "detect":
            det_name, modes = stmt.args
            if det_name in detector_names:
                _fail(
                    f"detector {det_name!r} already defined on line "
                    f"{detector_names[det_name]}",
                    stmt.line,
                    stmt.column,
                    "bad-parameter",
                )
            detector_names[det_name] = stmt.line
            for m in modes:
                flow.consume(m, stmt)
            detectors.append(DetectorGroup(det_name, modes))
        else:  # pragma: no cover - parse admits no other kinds
            raise AssertionError(stmt.kind)

    if source_stmt is not None:
        _, src_weights = source_stmt.args
        if src_weights is not None and set_weights is not None:
            _fail(
                "case weights given both in a set line and on the source",
                source_stmt.line,
                source_stmt.column,
                "bad-parameter",
            )
        chosen = src_weights if src_weights is not None else set_weights
        try:
            weights = CaseWeights(*chosen) if chosen is not None else CaseWeights()
        except ValueError as exc:
            _fail(str(exc), source_stmt.line, source_stmt.column, "bad-parameter")
        source = SourceSpec(kind="pdc2", weights=weights)
    elif set_weights is not None:
        _fail(
            "case_weights given but the document has no source",
            doc.statements[0].line if doc.statements else 1,
            1,
            "bad-parameter",
        )

    try:
        settings = NetworkSettings(**settings_kw)
    except ValueError as exc:
        _fail(str(exc), 1, 1, "bad-parameter")

    return CircuitNetwork(
        name=name,
        elements=tuple(elements),
        couplings=tuple(couplings),
        detectors=tuple(detectors),
        source=source,
        settings=settings,
    )


# --- canonical text --------------------------------------------------------


def _format_number(x: float) -> str:
    return repr(float(x))


def pretty_print(doc: DslDocument) -> str:
    """Canonical text for a document; reparses to an equal document."""
    lines = []
    for stmt in doc.statements:
        if stmt.kind == "set":
            key, value = stmt.args
            if key == "case_weights":
                body = " ".join(_format_number(v) for v in value)
            elif key == "noise":
                body = value
            else:
                body = _format_number(value)
            lines.append(f"set {key} {body}")
        elif stmt.kind == "source":
            kind, weights = stmt.args
            if weights is None:
                lines.append(f"source {kind}")
            else:
                body = " ".join(_format_number(w) for w in weights)
                lines.append(f"source {kind} weights {body}")
        elif stmt.kind == "kerr":
            mode, pol, units = stmt.args
            lines.append(f"kerr {mode} {pol} {_format_number(units)}")
        elif stmt.kind in ("pbs", "bs"):
            ins, outs = stmt.args
            lines.append(f"{stmt.kind} {' '.join(ins)} -> {' '.join(outs)}")
        elif stmt.kind in ("hwp45", "hwp90"):
            lines.append(f"{stmt.kind} {stmt.args[0]}")
        elif stmt.kind == "route":
            src, dst = stmt.args
            lines.append(f"route {src} -> {dst}")
        elif stmt.kind == "detect":
            det_name, modes = stmt.args
            lines.append(f"detect {det_name} = {' '.join(modes)}")
    return "\n".join(lines) + "\n"
