"""Static predictability lint for emitted C, plus the operation-count model.

The linter understands only the emitter's restricted grammar; anything it
cannot prove harmless under the rules below is a finding. Rules:

    R0  file does not tokenize / braces unbalanced (parse failure)
    R1  calls to allocation routines (malloc family, alloca)
    R2  recursion anywhere in the call graph
    R3  for-loops outside `for (int i = 0; i < <literal>; i++)`, or an
        induction variable written inside its own loop body
    R4  while / do / goto
    R5  function pointers (any `(*` declarator form)
    R6  calls that leave the emitted unit
    R7  array declarators whose size is not an integer literal (VLAs)

The cost model counts, per layer: multiply-accumulates (dense/conv inner
products only, the same events the interpreter kernels count), activation
function applications (one per produced neuron, identity included),
memory loads and stores. Counts are functions of the architecture alone;
weights and inputs cannot change them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .ir import (
    AvgPool2DSpec,
    Conv2DSpec,
    DenseSpec,
    MaxPool2DSpec,
    NetworkIR,
    infer_shapes,
)

# --------------------------------------------------------------------------
# Lint
# --------------------------------------------------------------------------

ALLOCATION_FUNCTIONS = frozenset(
    ["malloc", "calloc", "realloc", "free", "aligned_alloc", "alloca", "valloc", "posix_memalign"]
)

_STATEMENT_KEYWORDS = frozenset(["if", "else", "for", "while", "do", "return", "switch", "sizeof", "goto"])

_TYPE_STARTERS = frozenset(
    [
        "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned",
        "const", "static", "extern", "register", "volatile", "inline", "union", "struct",
        "typedef", "_Bool",
        "int8_t", "int16_t", "int32_t", "int64_t",
        "uint8_t", "uint16_t", "uint32_t", "uint64_t",
        "fix16_t", "size_t",
    ]
)

_PUNCTUATORS = [
    ">>=", "<<=", "...",
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "{", "}", "(", ")", "[", "]", ";", ",", ".", "+", "-", "*", "/", "%",
    "<", ">", "=", "&", "|", "^", "!", "~", "?", ":", "#",
]

_ASSIGN_OPS = frozenset(["=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^="])

_TOKEN_RE = re.compile(
    r"""
    (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<num>
        0[xX][0-9a-fA-F]*\.?[0-9a-fA-F]*(?:[pP][+-]?[0-9]+)?[uUlLfF]*
      | (?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?[uUlLfF]*
    )
  | (?P<punct>""" + "|".join(re.escape(p) for p in sorted(_PUNCTUATORS, key=len, reverse=True)) + r""")
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # id | num | punct | str
    value: str
    line: int


@dataclass(frozen=True)
class LintFinding:
    rule: str
    file: str
    line: int
    message: str

    def __str__(self) -> str:
        return f"{self.rule} {self.file}:{self.line}: {self.message}"


@dataclass(frozen=True)
class LintReport:
    findings: tuple[LintFinding, ...]

    @property
    def verdict(self) -> bool:
        return not self.findings

    def to_text(self) -> str:
        if not self.findings:
            return "PASS\n"
        lines = ["FAIL"]
        lines += [f"{f.rule}\t{f.file}\t{f.line}\t{f.message}" for f in self.findings]
        return "\n".join(lines) + "\n"


class _ParseFailure(Exception):
    def __init__(self, line: int, message: str):
        self.line = line
        self.message = message
        super().__init__(message)


def _strip_comments_and_strings(text: str) -> str:
    """Blank out comments and literals in place, preserving line structure."""
    out = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            j = text.find("\n", i)
            i = n if j < 0 else j
        elif c == "/" and i + 1 < n and text[i + 1] == "*":
            j = text.find("*/", i + 2)
            if j < 0:
                raise _ParseFailure(text.count("\n", 0, i) + 1, "unterminated comment")
            out.append("\n" * text.count("\n", i, j + 2))
            i = j + 2
        elif c in "\"'":
            quote = c
            j = i + 1
            while j < n and text[j] != quote:
                if text[j] == "\\":
                    j += 1
                elif text[j] == "\n":
                    raise _ParseFailure(text.count("\n", 0, i) + 1, "unterminated literal")
                j += 1
            if j >= n:
                raise _ParseFailure(text.count("\n", 0, i) + 1, "unterminated literal")
            # Neutral placeholders that tokenize cleanly; no rule inspects
            # literal contents.
            out.append("__string__" if quote == '"' else "0")
            i = j + 1
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _tokenize(text: str) -> list[Token]:
    stripped = _strip_comments_and_strings(text)
    tokens = []
    line = 1
    i = 0
    n = len(stripped)
    while i < n:
        c = stripped[i]
        if c == "\n":
            line += 1
            i += 1
            continue
        if c in " \t\r\f\v":
            i += 1
            continue
        if c == "\\":  # line continuation
            i += 1
            continue
        m = _TOKEN_RE.match(stripped, i)
        if not m:
            raise _ParseFailure(line, f"unrecognized character {c!r}")
        tokens.append(Token(m.lastgroup, m.group(), line))
        i = m.end()
    return tokens


def _is_int_literal(tok: Token) -> bool:
    return tok.kind == "num" and tok.value.isdigit()


@dataclass
class _FileScan:
    name: str
    tokens: list[Token]
    defined: dict[str, tuple[int, int]] = field(default_factory=dict)  # fn -> body range
    calls: list[tuple[str, str, int]] = field(default_factory=list)  # (caller, callee, line)


def _match_forward(tokens: list[Token], start: int, open_p: str, close_p: str) -> int:
    """Index of the punctuator closing tokens[start]; raises on imbalance."""
    depth = 0
    for i in range(start, len(tokens)):
        t = tokens[i]
        if t.kind == "punct":
            if t.value == open_p:
                depth += 1
            elif t.value == close_p:
                depth -= 1
                if depth == 0:
                    return i
    raise _ParseFailure(tokens[start].line, f"unbalanced {open_p!r}")


def _scan_file(name: str, text: str) -> _FileScan:
    tokens = _tokenize(text)
    scan = _FileScan(name, tokens)

    # Top-level walk: collect function definitions and their body ranges.
    i = 0
    n = len(tokens)
    while i < n:
        t = tokens[i]
        if t.kind == "punct" and t.value == "#":
            # preprocessor line: skip to next source line
            ln = t.line
            while i < n and tokens[i].line == ln:
                i += 1
            continue
        if t.kind == "id" and i + 1 < n and tokens[i + 1].value == "(" and t.value not in _STATEMENT_KEYWORDS:
            close = _match_forward(tokens, i + 1, "(", ")")
            if close + 1 < n and tokens[close + 1].value == "{":
                body_end = _match_forward(tokens, close + 1, "{", "}")
                scan.defined[t.value] = (close + 2, body_end)
                i = body_end + 1
                continue
            i = close + 1
            continue
        if t.kind == "punct" and t.value == "{":
            i = _match_forward(tokens, i, "{", "}") + 1
            continue
        i += 1

    # Call sites inside each body.
    for fn, (lo, hi) in scan.defined.items():
        for j in range(lo, hi):
            t = tokens[j]
            if (
                t.kind == "id"
                and t.value not in _STATEMENT_KEYWORDS
                and t.value not in _TYPE_STARTERS
                and j + 1 < hi
                and tokens[j + 1].value == "("
            ):
                scan.calls.append((fn, t.value, t.line))
    return scan


def _check_for_loops(scan: _FileScan, findings: list[LintFinding]):
    """R3: validate every for-header and freeze its induction variable."""
    tokens = scan.tokens

    def walk(lo: int, hi: int, frozen: dict[str, int]):
        j = lo
        while j < hi:
            t = tokens[j]
            if t.kind == "id" and t.value in frozen:
                prev = tokens[j - 1] if j > lo else None
                nxt = tokens[j + 1] if j + 1 < hi else None
                bad = (
                    (nxt is not None and nxt.kind == "punct" and (nxt.value in _ASSIGN_OPS or nxt.value in ("++", "--")))
                    or (prev is not None and prev.kind == "punct" and prev.value in ("++", "--", "&"))
                )
                if bad:
                    findings.append(
                        LintFinding(
                            "R3", scan.name, t.line,
                            f"induction variable {t.value!r} modified inside its loop",
                        )
                    )
            if t.kind == "id" and t.value == "for":
                header = tokens[j + 1 : j + 12]
                shape = [tk.value if tk.kind == "punct" else tk.kind for tk in header]
                ok = (
                    len(header) == 11
                    and shape[0] == "("
                    and header[1].value == "int"
                    and header[2].kind == "id"
                    and shape[3] == "="
                    and _is_int_literal(header[4])
                    and shape[5] == ";"
                    and header[6].kind == "id"
                    and shape[7] == "<"
                    and _is_int_literal(header[8])
                    and shape[9] == ";"
                    and header[10].kind == "id"
                )
                ok = (
                    ok
                    and j + 13 < hi
                    and tokens[j + 12].value == "++"
                    and tokens[j + 13].value == ")"
                    and header[2].value == header[6].value == header[10].value
                )
                if not ok:
                    findings.append(
                        LintFinding(
                            "R3", scan.name, t.line,
                            "for-loop outside the static grammar "
                            "`for (int i = 0; i < <literal>; i++)`",
                        )
                    )
                    j += 1
                    continue
                var = header[2].value
                body_open = j + 14
                if body_open < hi and tokens[body_open].value == "{":
                    body_close = _match_forward(tokens, body_open, "{", "}")
                    inner = dict(frozen)
                    inner[var] = t.line
                    walk(body_open + 1, body_close, inner)
                    j = body_close + 1
                    continue
                findings.append(
                    LintFinding("R3", scan.name, t.line, "for-loop body must be a braced block")
                )
                j = body_open
                continue
            j += 1

    for _, (lo, hi) in scan.defined.items():
        walk(lo, hi, {})


def _check_declaration_arrays(scan: _FileScan, findings: list[LintFinding]):
    """R7: array declarators must carry a single integer-literal size."""
    tokens = scan.tokens
    boundaries = {";", "{", "}"}
    for j, t in enumerate(tokens):
        if t.kind != "punct" or t.value != "[":
            continue
        # Find the start of the enclosing statement.
        k = j - 1
        while k >= 0 and not (tokens[k].kind == "punct" and tokens[k].value in boundaries):
            k -= 1
        stmt = tokens[k + 1 : j]
        if not stmt or stmt[0].kind != "id" or stmt[0].value not in _TYPE_STARTERS:
            continue  # expression context
        if any(tk.kind == "punct" and tk.value == "=" for tk in stmt):
            continue  # bracket belongs to the initializer expression
        close = _match_forward(tokens, j, "[", "]")
        inside = tokens[j + 1 : close]
        if len(inside) != 1 or not _is_int_literal(inside[0]):
            findings.append(
                LintFinding(
                    "R7", scan.name, t.line,
                    "array size must be a single integer literal (no VLAs)",
                )
            )


def lint_files(files: dict[str, str]) -> LintReport:
    """Run all rules over a set of C sources forming one emitted unit."""
    findings: list[LintFinding] = []
    scans: list[_FileScan] = []

    for name, text in sorted(files.items()):
        try:
            scans.append(_scan_file(name, text))
        except _ParseFailure as exc:
            findings.append(LintFinding("R0", name, exc.line, f"parse failure: {exc.message}"))
    if findings:
        return LintReport(tuple(findings))

    defined = {fn for s in scans for fn in s.defined}

    for scan in scans:
        tokens = scan.tokens

        # R4 / R5 on the flat stream.
        for j, t in enumerate(tokens):
            if t.kind == "id" and t.value in ("while", "do", "goto"):
                findings.append(
                    LintFinding("R4", scan.name, t.line, f"forbidden construct {t.value!r}")
                )
            if (
                t.kind == "punct"
                and t.value == "("
                and j + 1 < len(tokens)
                and tokens[j + 1].kind == "punct"
                and tokens[j + 1].value == "*"
            ):
                findings.append(
                    LintFinding("R5", scan.name, t.line, "function-pointer declarator `(*`")
                )

        # R1 / R6 on call sites.
        for caller, callee, line in scan.calls:
            if callee in ALLOCATION_FUNCTIONS:
                findings.append(
                    LintFinding("R1", scan.name, line, f"allocation call {callee!r}")
                )
            elif callee not in defined:
                findings.append(
                    LintFinding(
                        "R6", scan.name, line,
                        f"call to {callee!r} leaves the emitted unit",
                    )
                )

        _check_for_loops(scan, findings)
        _check_declaration_arrays(scan, findings)

    # R2: cycles in the call graph (self-calls included).
    graph: dict[str, set[str]] = {fn: set() for s in scans for fn in s.defined}
    call_lines: dict[tuple[str, str], tuple[str, int]] = {}
    for scan in scans:
        for caller, callee, line in scan.calls:
            if callee in graph:
                graph[caller].add(callee)
                call_lines.setdefault((caller, callee), (scan.name, line))
    state: dict[str, int] = {}

    def dfs(fn: str, stack: list[str]) -> list[str] | None:
        state[fn] = 1
        for nxt in sorted(graph[fn]):
            if state.get(nxt) == 1:
                return stack + [fn, nxt]
            if state.get(nxt, 0) == 0:
                cycle = dfs(nxt, stack + [fn])
                if cycle:
                    return cycle
        state[fn] = 2
        return None

    for fn in sorted(graph):
        if state.get(fn, 0) == 0:
            cycle = dfs(fn, [])
            if cycle:
                a, b = cycle[-2], cycle[-1]
                where = call_lines.get((a, b), (scans[0].name, 0))
                findings.append(
                    LintFinding(
                        "R2", where[0], where[1],
                        f"recursion: {' -> '.join(cycle[cycle.index(b):] + [b])}",
                    )
                )
                break

    findings.sort(key=lambda f: (f.file, f.line, f.rule))
    return LintReport(tuple(findings))


def lint(emitted) -> LintReport:
    """Lint an EmittedUnit (accepts any object exposing `.files()`)."""
    return lint_files(emitted.files())


# --------------------------------------------------------------------------
# Cost model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CostWeights:
    """Abstract per-operation cycle weights; arbitrary but configurable.

    Reports are comparative tools, never absolute worst-case time.
    """

    mac: int = 2
    activation: int = 4
    load: int = 1
    store: int = 1


@dataclass(frozen=True)
class LayerCost:
    kind: str
    macs: int
    activation_evals: int
    loads: int
    stores: int


@dataclass(frozen=True)
class CostReport:
    network: str
    per_layer: tuple[LayerCost, ...]
    weights: CostWeights = field(default=CostWeights())

    @property
    def total(self) -> LayerCost:
        return LayerCost(
            "total",
            sum(l.macs for l in self.per_layer),
            sum(l.activation_evals for l in self.per_layer),
            sum(l.loads for l in self.per_layer),
            sum(l.stores for l in self.per_layer),
        )

    @property
    def cycle_estimate(self) -> int:
        t = self.total
        w = self.weights
        return t.macs * w.mac + t.activation_evals * w.activation + t.loads * w.load + t.stores * w.store

    def to_text(self) -> str:
        lines = ["layer\tkind\tmacs\tactivations\tloads\tstores"]
        for i, l in enumerate(self.per_layer):
            lines.append(f"{i}\t{l.kind}\t{l.macs}\t{l.activation_evals}\t{l.loads}\t{l.stores}")
        t = self.total
        lines.append(f"total\t-\t{t.macs}\t{t.activation_evals}\t{t.loads}\t{t.stores}")
        lines.append(f"cycle_estimate\t{self.cycle_estimate}")
        return "\n".join(lines) + "\n"


def cost_model(network: NetworkIR, weights: CostWeights | None = None) -> CostReport:
    """Static per-invocation operation counts; exact functions of the shapes."""
    network.require_valid()
    shapes = infer_shapes(network)
    per_layer = []
    for layer, out_shape in zip(network.layers, shapes):
        out_n = out_shape.count
        if isinstance(layer, DenseSpec):
            macs = layer.in_count * layer.out_count
            cost = LayerCost("dense", macs, out_n, 2 * macs + out_n, out_n)
        elif isinstance(layer, Conv2DSpec):
            macs = out_n * layer.kernel_h * layer.kernel_w * layer.in_channels
            cost = LayerCost("conv2d", macs, out_n, 2 * macs + out_n, out_n)
        elif isinstance(layer, (AvgPool2DSpec, MaxPool2DSpec)):
            window = layer.window_h * layer.window_w
            cost = LayerCost(layer.kind, 0, 0, out_n * window, out_n)
        else:
            cost = LayerCost("flatten", 0, 0, out_n, out_n)
        per_layer.append(cost)
    return CostReport(network.name, tuple(per_layer), weights or CostWeights())


@dataclass(frozen=True)
class CostDelta:
    """Field-wise differences (a - b) plus an ordering on cycle estimate."""

    macs: int
    activation_evals: int
    loads: int
    stores: int
    cycle_estimate: int

    @property
    def ordering(self) -> int:
        return (self.cycle_estimate > 0) - (self.cycle_estimate < 0)

    @property
    def is_zero(self) -> bool:
        return not any(
            (self.macs, self.activation_evals, self.loads, self.stores, self.cycle_estimate)
        )


def compare_costs(a: CostReport, b: CostReport) -> CostDelta:
    ta, tb = a.total, b.total
    return CostDelta(
        macs=ta.macs - tb.macs,
        activation_evals=ta.activation_evals - tb.activation_evals,
        loads=ta.loads - tb.loads,
        stores=ta.stores - tb.stores,
        cycle_estimate=a.cycle_estimate - b.cycle_estimate,
    )
