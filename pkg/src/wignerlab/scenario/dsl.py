"""
Line-oriented scenario format (``.scn``).

::

    # comment
    register <name> labels=<l1,l2,...>
    agent <name> ready=<label> labels=<l1,...>
    prepare <reg> : <amp>, <amp>, ...
    cprepare <reg> on <record> { <outcome>: <amps> ; ... }
    ameasure <agent> on <reg,...> basis { <label>: <amps> ; ... } record <record>
    xmeasure on <reg,...> basis { ... } record <record>
    xmeasure on <reg,...> blocks { <label>: <amps> | <amps> ; <label>: * } record <record>
    unitary on <reg,...> matrix { <row> ; <row> ; ... }

A statement ends at a newline unless a ``{`` is open. Inside ``blocks`` the
vectors spanning one outcome are separated by ``|`` and ``*`` stands for the
orthogonal complement of the other blocks. Amplitudes in a vector follow the
label order of the listed registers, first register most significant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import ScenarioError, ScenarioParseError
from .expr import Tok, _Parser
from .model import (
    COMPLEMENT,
    AgentMeasure,
    ApplyUnitary,
    ControlledPrepare,
    ExternalMeasure,
    MeasureDecl,
    Prepare,
    Register,
    Scenario,
)

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[{}(),;:=*|+\-/])"
)


@dataclass(frozen=True)
class _T:
    kind: str  # name | num | op | nl | eof
    text: str
    line: int
    col: int


def _lex(text: str) -> list[_T]:
    toks = []
    line, line_start, pos = 1, 0, 0
    depth = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ScenarioParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            if depth == 0:
                toks.append(_T("nl", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind in ("num", "name", "op"):
            t = m.group(kind)
            if t == "{":
                depth += 1
            elif t == "}":
                depth = max(0, depth - 1)
            toks.append(_T(kind, t, line, col))
        pos = m.end()
    toks.append(_T("nl", "\n", line, pos - line_start + 1))
    toks.append(_T("eof", "", line, pos - line_start + 1))
    return toks


_AMP_STOP = {",", ";", "}", "|", "{"}


class _StatementParser:
    def __init__(self, toks: list[_T]):
        self.toks = toks
        self.i = 0

    def peek(self) -> _T:
        return self.toks[self.i]

    def error(self, msg, tok: _T | None = None):
        tok = tok or self.peek()
        raise ScenarioParseError(msg, tok.line, tok.col)

    def next(self) -> _T:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _T:
        t = self.peek()
        if t.text != text or t.kind not in ("op", "name"):
            self.error(f"expected {text!r}, found {t.text or 'end of input'!r}")
        return self.next()

    def ident(self, what: str) -> str:
        t = self.peek()
        if t.kind != "name":
            self.error(f"expected {what}, found {t.text.strip() or 'end of line'!r}")
        return self.next().text

    def label(self) -> str:
        t = self.peek()
        if t.kind == "name" or (t.kind == "num" and t.text.isdigit()):
            return self.next().text
        self.error(f"expected a label, found {t.text.strip() or 'end of line'!r}")

    def name_list(self, item) -> list[str]:
        out = [item()]
        while self.peek().text == ",":
            self.next()
            out.append(item())
        return out

    def end_of_statement(self):
        t = self.peek()
        if t.kind != "nl":
            self.error(f"unexpected {t.text!r} at end of statement")
        self.next()

    # amplitudes ---------------------------------------------------------

    def amp(self) -> str:
        start = self.peek()
        toks = []
        depth = 0
        while True:
            t = self.peek()
            if t.kind in ("nl", "eof"):
                break
            if depth == 0 and t.kind == "op" and t.text in _AMP_STOP:
                break
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth -= 1
            toks.append(self.next())
        if not toks:
            self.error("expected an amplitude expression", start)
        p = _Parser([Tok(t.kind, t.text, t.col) for t in toks], start.line, start.col)
        p.expr()
        if p.peek() is not None:
            p.error(f"unexpected {p.peek().text!r} in amplitude")
        return "".join(t.text for t in toks)

    def amp_list(self) -> list[str]:
        out = [self.amp()]
        while self.peek().text == ",":
            self.next()
            out.append(self.amp())
        return out

    def entries(self, allow_complement=False, multi=False):
        """``{ label: amps ; ... }`` -> list of (label, vectors | '*')."""
        self.expect("{")
        out = []
        while self.peek().text != "}":
            lab = self.label()
            self.expect(":")
            if allow_complement and self.peek().text == "*" and self.toks[self.i + 1].text in (";", "}"):
                self.next()
                out.append((lab, COMPLEMENT))
            else:
                vecs = [self.amp_list()]
                while multi and self.peek().text == "|":
                    self.next()
                    vecs.append(self.amp_list())
                out.append((lab, vecs))
            if self.peek().text == ";":
                self.next()
            elif self.peek().text != "}":
                self.error(f"expected ';' or '}}', found {self.peek().text.strip() or 'end of line'!r}")
        self.expect("}")
        return out

    def rows(self):
        self.expect("{")
        out = []
        while self.peek().text != "}":
            out.append(self.amp_list())
            if self.peek().text == ";":
                self.next()
            elif self.peek().text != "}":
                self.error(f"expected ';' or '}}', found {self.peek().text!r}")
        self.expect("}")
        return out

    def measurement(self) -> MeasureDecl:
        t = self.peek()
        if t.text == "basis":
            self.next()
            return MeasureDecl("basis", tuple((l, tuple(v)) for l, v in self.entries()))
        if t.text == "blocks":
            self.next()
            return MeasureDecl("blocks", tuple(self.entries(allow_complement=True, multi=True)))
        self.error(f"expected 'basis' or 'blocks', found {t.text!r}")

    def key_values(self, keys: set[str]) -> dict:
        out = {}
        while self.peek().kind == "name" and self.peek().text in keys:
            key = self.next()
            if key.text in out:
                self.error(f"duplicate {key.text}=", key)
            self.expect("=")
            out[key.text] = self.name_list(self.label) if key.text == "labels" else self.label()
        return out

    # statements -----------------------------------------------------------

    def statement(self, decls: list, steps: list):
        head = self.peek()
        kw = self.ident("a statement keyword")
        if kw in ("register", "agent"):
            name = self.ident("a register name")
            kv = self.key_values({"labels", "ready"} if kw == "agent" else {"labels"})
            if "labels" not in kv:
                self.error("missing labels=")
            if kw == "agent" and "ready" not in kv:
                self.error("missing ready=")
            decls.append((head, Register(name, tuple(kv["labels"]), kv.get("ready"))))
        elif kw == "prepare":
            reg = self.ident("a register name")
            self.expect(":")
            steps.append((head, Prepare(reg, tuple(self.amp_list()))))
        elif kw == "cprepare":
            reg = self.ident("a register name")
            self.expect("on")
            rec = self.ident("a record label")
            cases = [(l, v[0]) for l, v in self.entries()]
            steps.append((head, ControlledPrepare(reg, rec, tuple(cases))))
        elif kw == "ameasure":
            ag = self.ident("an agent name")
            self.expect("on")
            targets = self.name_list(lambda: self.ident("a register name"))
            decl = self.measurement()
            self.expect("record")
            rec = self.ident("a record label")
            steps.append((head, AgentMeasure(ag, tuple(targets), decl, rec)))
        elif kw == "xmeasure":
            self.expect("on")
            targets = self.name_list(lambda: self.ident("a register name"))
            decl = self.measurement()
            self.expect("record")
            rec = self.ident("a record label")
            steps.append((head, ExternalMeasure(tuple(targets), decl, rec)))
        elif kw == "unitary":
            self.expect("on")
            targets = self.name_list(lambda: self.ident("a register name"))
            self.expect("matrix")
            steps.append((head, ApplyUnitary(tuple(targets), tuple(tuple(r) for r in self.rows()))))
        else:
            self.error(f"unknown statement {kw!r}", head)
        self.end_of_statement()


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document."""
    p = _StatementParser(_lex(text))
    decls: list = []
    steps: list = []
    while p.peek().kind != "eof":
        if p.peek().kind == "nl":
            p.next()
            continue
        p.statement(decls, steps)
    if not decls:
        raise ScenarioParseError("no registers declared", 1, 1)
    registers = tuple(r for _, r in decls)
    # validate incrementally so that errors point at the offending statement
    prefixes = [(decls[k][0], registers[: k + 1], ()) for k in range(len(decls))]
    prefixes += [(steps[n][0], registers, tuple(s for _, s in steps[: n + 1])) for n in range(len(steps))]
    for head, regs, prefix in prefixes:
        try:
            Scenario(regs, prefix)
        except ScenarioParseError:
            raise
        except ScenarioError as e:
            raise ScenarioParseError(str(e), head.line, head.col) from None
    return Scenario(registers, tuple(s for _, s in steps))


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_WRAP = 100


def _braces(items: list[str]) -> str:
    one = "{ " + " ; ".join(items) + " }"
    if len(one) <= _WRAP:
        return one
    return "{\n" + " ;\n".join("  " + it for it in items) + "\n}"


def _measurement_text(decl: MeasureDecl) -> str:
    items = []
    for label, vecs in decl.entries:
        if vecs == COMPLEMENT:
            items.append(f"{label}: *")
        else:
            items.append(f"{label}: " + " | ".join(", ".join(v) for v in vecs))
    return f"{decl.kind} " + _braces(items)


def serialize(s: Scenario) -> str:
    lines = []
    for r in s.registers:
        if r.is_agent:
            lines.append(f"agent {r.name} ready={r.ready} labels={','.join(r.labels)}")
        else:
            lines.append(f"register {r.name} labels={','.join(r.labels)}")
    for step in s.steps:
        if isinstance(step, Prepare):
            lines.append(f"prepare {step.register} : {', '.join(step.amps)}")
        elif isinstance(step, ApplyUnitary):
            rows = [", ".join(r) for r in step.rows]
            lines.append(f"unitary on {','.join(step.registers)} matrix " + _braces(rows))
        elif isinstance(step, ControlledPrepare):
            cases = [f"{o}: {', '.join(a)}" for o, a in step.cases]
            lines.append(f"cprepare {step.target} on {step.control} " + _braces(cases))
        elif isinstance(step, AgentMeasure):
            lines.append(
                f"ameasure {step.agent} on {','.join(step.targets)} "
                f"{_measurement_text(step.measurement)} record {step.record}"
            )
        elif isinstance(step, ExternalMeasure):
            lines.append(
                f"xmeasure on {','.join(step.targets)} {_measurement_text(step.measurement)} record {step.record}"
            )
    return "\n".join(lines) + "\n"
