"""MIR: a small SSA intermediate representation for pure integer functions.

Textual form::

    func @nz(%x: i16) -> i16 {
    entry:
      %t0 = icmp.ne %x, const.i16 0
      %t1 = select %t0, const.i16 -1, const.i16 0
      ret %t1
    }

Blocks may declare typed parameters (``loop(%i: i8):``) which ``br`` and
``condbr`` fill positionally; they replace phi nodes.  Two extra constructs,
``callv`` and ``diverge``, exist only in N-version bundle wrappers and are
rejected unless ``bundle=True``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .errors import ParseError, ValidationError
from .semantics import BINARY_OPS, CAST_OPS, ICMP_PREDICATES, to_signed

WIDTHS = (1, 8, 16, 32, 64)
MAX_INSTRUCTIONS = 1000
TERMINATORS = frozenset(["br", "condbr", "ret", "trap", "diverge"])
BUNDLE_OPS = frozenset(["callv", "diverge"])
DIALECT_TAGS = ("cm", "gm", "raw")

# name -> (arity, inert).  Inert intrinsics may be dropped by normalization.
REGISTERED_INTRINSICS = {"gm.divcheck": (1, False)}


@dataclass(frozen=True, order=True)
class MirType:
    width: int

    def __post_init__(self):
        if self.width not in WIDTHS:
            raise ValueError(f"unsupported integer width {self.width}")

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    @property
    def smin(self) -> int:
        return -(1 << (self.width - 1))

    @property
    def smax(self) -> int:
        return (1 << (self.width - 1)) - 1

    def __str__(self):
        return f"i{self.width}"


I1, I8, I16, I32, I64 = (MirType(w) for w in WIDTHS)


def parse_type(text: str) -> MirType:
    m = re.fullmatch(r"i(\d+)", text)
    if not m or int(m.group(1)) not in WIDTHS:
        raise ValueError(f"unknown type {text!r}")
    return MirType(int(m.group(1)))


@dataclass(frozen=True)
class Reg:
    name: str

    def __str__(self):
        return f"%{self.name}"


@dataclass(frozen=True)
class Const:
    ty: MirType
    bits: int

    @classmethod
    def of(cls, ty: MirType, value: int) -> "Const":
        return cls(ty, value & ty.mask)

    @property
    def signed(self) -> int:
        return to_signed(self.bits, self.ty.width)

    def __str__(self):
        value = self.bits if self.ty.width == 1 else self.signed
        return f"const.{self.ty} {value}"


Operand = Union[Reg, Const]


@dataclass(frozen=True)
class Target:
    label: str
    args: tuple = ()


@dataclass(frozen=True)
class Instruction:
    op: str
    dest: Optional[str] = None
    ty: Optional[MirType] = None
    operands: tuple = ()
    targets: tuple = ()
    pred: Optional[str] = None
    intrinsic: Optional[str] = None
    version: Optional[int] = None

    @property
    def is_terminator(self) -> bool:
        return self.op in TERMINATORS

    def uses(self):
        out = [o for o in self.operands if isinstance(o, Reg)]
        for t in self.targets:
            out.extend(a for a in t.args if isinstance(a, Reg))
        return out


@dataclass(frozen=True)
class BasicBlock:
    label: str
    params: tuple = ()          # ((name, MirType), ...)
    instructions: tuple = ()    # non-terminators
    terminator: Instruction = field(default_factory=lambda: Instruction("trap"))

    def all_instructions(self):
        return (*self.instructions, self.terminator)

    def successors(self):
        return [t.label for t in self.terminator.targets]


@dataclass(frozen=True)
class Function:
    name: str
    params: tuple               # ((name, MirType), ...)
    return_type: MirType
    blocks: tuple
    dialect_tag: str = "raw"

    @property
    def entry(self) -> BasicBlock:
        return self.blocks[0]

    @property
    def signature(self):
        return tuple(t for _, t in self.params), self.return_type

    def block_map(self):
        return {b.label: b for b in self.blocks}

    def instruction_count(self) -> int:
        return sum(len(b.instructions) + 1 for b in self.blocks)

    def register_types(self):
        env = {name: ty for name, ty in self.params}
        for b in self.blocks:
            env.update(dict(b.params))
            for ins in b.instructions:
                if ins.dest is not None:
                    env[ins.dest] = ins.ty
        return env


# --------------------------------------------------------------------------
# printing

def format_operand(o: Operand) -> str:
    return str(o)


def _format_target(t: Target) -> str:
    if not t.args:
        return t.label
    return f"{t.label}({', '.join(map(str, t.args))})"


def format_instruction(ins: Instruction) -> str:
    ops = ", ".join(map(str, ins.operands))
    op = ins.op
    if op == "br":
        return f"br {_format_target(ins.targets[0])}"
    if op == "condbr":
        t, f = ins.targets
        return f"condbr {ins.operands[0]}, {_format_target(t)}, {_format_target(f)}"
    if op == "ret":
        return f"ret {ops}"
    if op == "trap":
        return "trap"
    if op == "diverge":
        return f"diverge {ops}" if ops else "diverge"
    lhs = f"%{ins.dest} = "
    if op == "icmp":
        return f"{lhs}icmp.{ins.pred} {ops}"
    if op in CAST_OPS:
        return f"{lhs}{op}.{ins.ty} {ops}"
    if op == "const":
        return f"{lhs}const.{ins.ty} {str(ins.operands[0]).split(' ', 1)[1]}"
    if op == "intrinsic":
        return f"{lhs}intrinsic.{ins.intrinsic} {ops}"
    if op == "callv":
        return f"{lhs}callv {ins.version}({ops})"
    return f"{lhs}{op} {ops}"


def print_mir(f: Function) -> str:
    params = ", ".join(f"%{n}: {t}" for n, t in f.params)
    tag = "" if f.dialect_tag == "raw" else f" !dialect.{f.dialect_tag}"
    lines = [f"func @{f.name}({params}) -> {f.return_type}{tag} {{"]
    for b in f.blocks:
        if b.params:
            bp = ", ".join(f"%{n}: {t}" for n, t in b.params)
            lines.append(f"{b.label}({bp}):")
        else:
            lines.append(f"{b.label}:")
        for ins in b.all_instructions():
            lines.append(f"  {format_instruction(ins)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>;[^\n]*)"
    r"|(?P<arrow>->)"
    r"|(?P<fname>@[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<reg>%[A-Za-z0-9_]+)"
    r"|(?P<num>-?[0-9]+)"
    r"|(?P<word>[A-Za-z_][A-Za-z0-9_.]*)"
    r"|(?P<punct>[(){}:,=!])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str):
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _MirParser:
    def __init__(self, text: str, bundle: bool):
        self.toks = _tokenize(text)
        self.i = 0
        self.bundle = bundle
        self.count = 0

    # token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k=1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def advance(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, kind, text=None) -> _Tok:
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            got = t.text or t.kind
            raise self.error(f"expected {want!r}, found {got!r}")
        return self.advance()

    def at(self, kind, text=None) -> bool:
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    # grammar
    def parse_type_tok(self) -> MirType:
        t = self.expect("word")
        try:
            return parse_type(t.text)
        except ValueError:
            raise self.error(f"unknown type {t.text!r}", t)

    def parse_params(self):
        params = []
        self.expect("punct", "(")
        while not self.at("punct", ")"):
            if params:
                self.expect("punct", ",")
            name = self.expect("reg").text[1:]
            self.expect("punct", ":")
            params.append((name, self.parse_type_tok()))
        self.expect("punct", ")")
        return tuple(params)

    def parse_function(self) -> Function:
        self.expect("word", "func")
        name = self.expect("fname").text[1:]
        params = self.parse_params()
        self.expect("arrow")
        ret = self.parse_type_tok()
        tag = "raw"
        if self.at("punct", "!"):
            self.advance()
            t = self.expect("word")
            if not t.text.startswith("dialect.") or t.text[8:] not in DIALECT_TAGS:
                raise self.error(f"unknown attribute {t.text!r}", t)
            tag = t.text[8:]
        self.expect("punct", "{")
        blocks = []
        while not self.at("punct", "}"):
            blocks.append(self.parse_block())
        if not blocks:
            raise self.error("function has no blocks")
        self.expect("punct", "}")
        self.expect("eof")
        return name, params, ret, blocks, tag

    def parse_block(self):
        label_tok = self.expect("word")
        if label_tok.text in TERMINATORS or "." in label_tok.text:
            raise self.error(f"expected block label, found {label_tok.text!r}", label_tok)
        params = self.parse_params() if self.at("punct", "(") else ()
        self.expect("punct", ":")
        instrs = []
        while True:
            if self.at("reg"):
                instrs.append(self.parse_instruction())
            elif self.at("word") and self.tok.text in TERMINATORS:
                term = self.parse_terminator()
                self._bump()
                return [label_tok.text, params, instrs, term]
            else:
                got = self.tok.text or self.tok.kind
                raise self.error(f"expected instruction or terminator, found {got!r}")

    def _bump(self):
        self.count += 1
        if self.count > MAX_INSTRUCTIONS:
            raise self.error(f"function exceeds {MAX_INSTRUCTIONS} instructions")

    def parse_operand(self) -> Operand:
        t = self.tok
        if t.kind == "reg":
            self.advance()
            return Reg(t.text[1:])
        if t.kind == "word" and t.text.startswith("const."):
            self.advance()
            try:
                ty = parse_type(t.text[6:])
            except ValueError:
                raise self.error(f"unknown type in {t.text!r}", t)
            v = self.expect("num")
            return self.make_const(ty, int(v.text), v)
        got = t.text or t.kind
        raise self.error(f"expected operand, found {got!r}")

    def make_const(self, ty, value, tok) -> Const:
        lo = ty.smin if ty.width > 1 else -1
        if not lo <= value <= ty.mask:
            raise self.error(f"constant {value} out of range for {ty}", tok)
        return Const.of(ty, value)

    def parse_operands(self, n):
        ops = [self.parse_operand()]
        while self.at("punct", ","):
            self.advance()
            ops.append(self.parse_operand())
        if n is not None and len(ops) != n:
            raise self.error(f"expected {n} operands, found {len(ops)}")
        return tuple(ops)

    def parse_target(self) -> Target:
        label = self.expect("word").text
        args = ()
        if self.at("punct", "("):
            self.advance()
            a = []
            while not self.at("punct", ")"):
                if a:
                    self.expect("punct", ",")
                a.append(self.parse_operand())
            self.advance()
            args = tuple(a)
        return Target(label, args)

    def parse_terminator(self) -> Instruction:
        t = self.advance()
        op = t.text
        if op == "ret":
            return Instruction("ret", operands=(self.parse_operand(),))
        if op == "trap":
            return Instruction("trap")
        if op == "br":
            return Instruction("br", targets=(self.parse_target(),))
        if op == "condbr":
            cond = self.parse_operand()
            self.expect("punct", ",")
            a = self.parse_target()
            self.expect("punct", ",")
            b = self.parse_target()
            return Instruction("condbr", operands=(cond,), targets=(a, b))
        if op == "diverge":
            if not self.bundle:
                raise self.error("'diverge' is only valid in bundle wrappers", t)
            ops = ()
            if self.at("reg") or (self.at("word") and self.tok.text.startswith("const.")):
                ops = self.parse_operands(None)
            return Instruction("diverge", operands=ops)
        raise self.error(f"unknown terminator {op!r}", t)

    def parse_instruction(self) -> Instruction:
        dest = self.advance().text[1:]
        self.expect("punct", "=")
        t = self.expect("word")
        self._bump()
        head, _, rest = t.text.partition(".")
        if head in BINARY_OPS and not rest:
            return Instruction(head, dest, None, self.parse_operands(2))
        if head == "icmp":
            if rest not in ICMP_PREDICATES:
                raise self.error(f"unknown icmp predicate {rest!r}", t)
            return Instruction("icmp", dest, I1, self.parse_operands(2), pred=rest)
        if head == "select" and not rest:
            return Instruction("select", dest, None, self.parse_operands(3))
        if head in CAST_OPS or head == "const":
            try:
                ty = parse_type(rest)
            except ValueError:
                raise self.error(f"bad type suffix in {t.text!r}", t)
            if head == "const":
                v = self.expect("num")
                return Instruction("const", dest, ty, (self.make_const(ty, int(v.text), v),))
            return Instruction(head, dest, ty, self.parse_operands(1))
        if head == "intrinsic":
            if rest not in REGISTERED_INTRINSICS:
                raise self.error(f"unknown intrinsic {rest!r}", t)
            arity = REGISTERED_INTRINSICS[rest][0]
            return Instruction("intrinsic", dest, I1, self.parse_operands(arity), intrinsic=rest)
        if head == "callv" and not rest:
            if not self.bundle:
                raise self.error("'callv' is only valid in bundle wrappers", t)
            k = int(self.expect("num").text)
            self.expect("punct", "(")
            args = []
            while not self.at("punct", ")"):
                if args:
                    self.expect("punct", ",")
                args.append(self.parse_operand())
            self.advance()
            return Instruction("callv", dest, None, tuple(args), version=k)
        raise self.error(f"unknown opcode {t.text!r}", t)


def _infer_types(name, params, ret, blocks):
    env = {n: t for n, t in params}
    for _, bparams, _, _ in blocks:
        env.update(dict(bparams))

    def op_type(o):
        return o.ty if isinstance(o, Const) else env.get(o.name)

    pending = True
    while pending:
        pending = False
        progress = False
        for blk in blocks:
            instrs = blk[2]
            for k, ins in enumerate(instrs):
                if ins.ty is not None:
                    env.setdefault(ins.dest, ins.ty)
                    continue
                if ins.op == "callv":
                    ty = ret
                else:
                    cands = ins.operands[1:] if ins.op == "select" else ins.operands
                    ty = next((op_type(o) for o in cands if op_type(o) is not None), None)
                if ty is None:
                    pending = True
                    continue
                instrs[k] = replace(ins, ty=ty)
                env[ins.dest] = ty
                progress = True
        if pending and not progress:
            missing = [i.dest for b in blocks for i in b[2] if i.ty is None]
            raise ValidationError([Diagnostic(f"cannot infer type of %{missing[0]}")])


def parse_mir(text: str, bundle: bool = False) -> Function:
    """Parse and validate one MIR function.

    Raises ParseError for syntax problems and ValidationError when the text is
    well-formed but violates a semantic invariant (SSA, types, labels...).
    """
    p = _MirParser(text, bundle)
    name, params, ret, blocks, tag = p.parse_function()
    _infer_types(name, params, ret, blocks)
    f = Function(
        name=name,
        params=params,
        return_type=ret,
        blocks=tuple(BasicBlock(l, bp, tuple(ins), term) for l, bp, ins, term in blocks),
        dialect_tag=tag,
    )
    diags = validate_function(f, bundle=bundle)
    if diags:
        raise ValidationError(diags)
    return f


# --------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Diagnostic:
    message: str
    block: Optional[str] = None
    index: Optional[int] = None

    def __str__(self):
        if self.block is None:
            return self.message
        return f"{self.block}[{self.index}]: {self.message}"


def reverse_postorder(f: Function):
    bm = f.block_map()
    seen, order = set(), []

    def visit(label):
        stack = [(label, iter(bm[label].successors()))]
        seen.add(label)
        while stack:
            lbl, it = stack[-1]
            for s in it:
                if s in bm and s not in seen:
                    seen.add(s)
                    stack.append((s, iter(bm[s].successors())))
                    break
            else:
                order.append(lbl)
                stack.pop()

    visit(f.entry.label)
    return order[::-1]


def predecessors(f: Function):
    preds = {b.label: [] for b in f.blocks}
    for b in f.blocks:
        for s in b.successors():
            if s in preds and b.label not in preds[s]:
                preds[s].append(b.label)
    return preds


def dominators(f: Function):
    """Map each reachable block label to the set of labels dominating it."""
    rpo = reverse_postorder(f)
    preds = predecessors(f)
    reachable = set(rpo)
    entry = f.entry.label
    dom = {l: set(rpo) for l in rpo}
    dom[entry] = {entry}
    changed = True
    while changed:
        changed = False
        for l in rpo[1:]:
            ps = [p for p in preds[l] if p in reachable]
            new = set.intersection(*(dom[p] for p in ps)) if ps else set()
            new = new | {l}
            if new != dom[l]:
                dom[l] = new
                changed = True
    return dom


def validate_function(f: Function, bundle: bool = False):
    """Return a list of Diagnostics; empty means the function is well formed."""
    diags = []

    def err(msg, block=None, index=None):
        diags.append(Diagnostic(msg, block, index))

    if not f.blocks:
        return [Diagnostic("function has no blocks")]
    if f.instruction_count() > MAX_INSTRUCTIONS:
        err(f"function exceeds {MAX_INSTRUCTIONS} instructions")
    if f.dialect_tag not in DIALECT_TAGS:
        err(f"unknown dialect tag {f.dialect_tag!r}")
    bm = {}
    for b in f.blocks:
        if b.label in bm:
            err(f"duplicate label {b.label}", b.label)
        bm[b.label] = b
    if f.entry.params:
        err("entry block cannot take parameters", f.entry.label)

    # SSA single assignment and the type environment
    types, def_site = {}, {}
    for n, t in f.params:
        if n in types:
            err(f"duplicate definition of %{n}")
        types[n] = t
        def_site[n] = (None, -1)
    for b in f.blocks:
        for n, t in b.params:
            if n in types:
                err(f"duplicate definition of %{n}", b.label)
            types[n] = t
            def_site[n] = (b.label, -1)
        for k, ins in enumerate(b.instructions):
            if ins.is_terminator:
                err(f"terminator {ins.op} before end of block", b.label, k)
                continue
            if ins.dest is None:
                err("instruction has no destination", b.label, k)
                continue
            if ins.dest in types:
                err(f"duplicate definition of %{ins.dest}", b.label, k)
            types[ins.dest] = ins.ty
            def_site[ins.dest] = (b.label, k)
        if not b.terminator.is_terminator:
            err("block does not end in a terminator", b.label)

    def otype(o, where):
        if isinstance(o, Const):
            if not 0 <= o.bits <= o.ty.mask:
                err(f"constant bits out of range for {o.ty}", *where)
            return o.ty
        t = types.get(o.name)
        if t is None:
            err(f"undefined register %{o.name}", *where)
        return t

    # per-instruction typing
    for b in f.blocks:
        for k, ins in enumerate(b.all_instructions()):
            where = (b.label, k)
            op = ins.op
            ts = [otype(o, where) for o in ins.operands]
            if None in ts:
                continue
            if op in BUNDLE_OPS and not bundle:
                err(f"'{op}' is only valid in bundle wrappers", *where)
            if op in BINARY_OPS:
                if len(ts) != 2 or ts[0] != ts[1] or ins.ty != ts[0]:
                    err(f"type mismatch in {op}", *where)
            elif op == "icmp":
                if ins.pred not in ICMP_PREDICATES:
                    err(f"unknown icmp predicate {ins.pred}", *where)
                if len(ts) != 2 or ts[0] != ts[1] or ins.ty != I1:
                    err("type mismatch in icmp", *where)
            elif op == "select":
                if len(ts) != 3 or ts[0] != I1 or ts[1] != ts[2] or ins.ty != ts[1]:
                    err("type mismatch in select", *where)
            elif op in CAST_OPS:
                if len(ts) != 1 or ins.ty is None:
                    err(f"malformed {op}", *where)
                elif op in ("zext", "sext") and not ins.ty.width > ts[0].width:
                    err(f"{op} must widen strictly", *where)
                elif op == "trunc" and not ins.ty.width < ts[0].width:
                    err("trunc must narrow strictly", *where)
            elif op == "const":
                if len(ts) != 1 or ts[0] != ins.ty:
                    err("malformed const", *where)
            elif op == "intrinsic":
                spec = REGISTERED_INTRINSICS.get(ins.intrinsic)
                if spec is None:
                    err(f"unknown intrinsic {ins.intrinsic}", *where)
                elif len(ts) != spec[0] or ins.ty != I1:
                    err(f"malformed intrinsic {ins.intrinsic}", *where)
            elif op == "callv":
                if ins.ty != f.return_type or tuple(ts) != tuple(t for _, t in f.params):
                    err("callv signature mismatch", *where)
            elif op == "ret":
                if len(ts) != 1 or ts[0] != f.return_type:
                    err("return type mismatch", *where)
            elif op == "condbr":
                if len(ts) != 1 or ts[0] != I1:
                    err("condbr condition must be i1", *where)
                if len(ins.targets) != 2:
                    err("condbr needs two targets", *where)
            elif op == "br":
                if len(ins.targets) != 1:
                    err("br needs one target", *where)
            elif op in ("trap", "diverge"):
                pass
            else:
                err(f"unknown opcode {op}", *where)
            for t in ins.targets:
                tgt = bm.get(t.label)
                if tgt is None:
                    err(f"unknown label {t.label}", *where)
                    continue
                if len(t.args) != len(tgt.params):
                    err(f"wrong argument count for {t.label}", *where)
                    continue
                for a, (_, pt) in zip(t.args, tgt.params):
                    at = otype(a, where)
                    if at is not None and at != pt:
                        err(f"argument type mismatch for {t.label}", *where)

    if diags:
        return diags

    # def-before-use, using dominance on reachable blocks
    dom = dominators(f)
    for b in f.blocks:
        for k, ins in enumerate(b.all_instructions()):
            for r in ins.uses():
                site = def_site.get(r.name)
                if site is None:
                    continue
                dblock, dk = site
                if dblock is None:
                    continue
                if dblock == b.label:
                    ok = dk < k
                elif b.label in dom:
                    ok = dblock in dom[b.label]
                else:
                    ok = True  # unreachable code never runs
                if not ok:
                    err(f"use before def: %{r.name}", b.label, k)
    return diags


def assert_valid(f: Function, bundle: bool = False) -> Function:
    diags = validate_function(f, bundle=bundle)
    if diags:
        raise ValidationError(diags)
    return f


# --------------------------------------------------------------------------
# renaming helpers

def _rename_operand(o, mapping):
    if isinstance(o, Reg) and o.name in mapping:
        return Reg(mapping[o.name])
    return o


def rename_registers(f: Function, mapping) -> Function:
    """Apply a register renaming to every definition and use."""
    def ren_ins(ins):
        return replace(
            ins,
            dest=mapping.get(ins.dest, ins.dest) if ins.dest else None,
            operands=tuple(_rename_operand(o, mapping) for o in ins.operands),
            targets=tuple(
                Target(t.label, tuple(_rename_operand(a, mapping) for a in t.args))
                for t in ins.targets
            ),
        )

    blocks = tuple(
        BasicBlock(
            b.label,
            tuple((mapping.get(n, n), t) for n, t in b.params),
            tuple(ren_ins(i) for i in b.instructions),
            ren_ins(b.terminator),
        )
        for b in f.blocks
    )
    params = tuple((mapping.get(n, n), t) for n, t in f.params)
    return replace(f, params=params, blocks=blocks)


def canonicalize(f: Function, name: Optional[str] = None) -> Function:
    """Rename params to %a0.., other registers to %v0.. in definition order,
    and labels to b0.. in block order.  Used for IR-level comparisons."""
    mapping = {n: f"a{i}" for i, (n, _) in enumerate(f.params)}
    k = 0
    for b in f.blocks:
        for n, _ in b.params:
            mapping[n] = f"v{k}"
            k += 1
        for ins in b.instructions:
            mapping[ins.dest] = f"v{k}"
            k += 1
    g = rename_registers(f, mapping)
    labels = {b.label: ("entry" if i == 0 else f"b{i}") for i, b in enumerate(g.blocks)}

    def relabel(ins):
        return replace(ins, targets=tuple(Target(labels[t.label], t.args) for t in ins.targets))

    blocks = tuple(
        BasicBlock(labels[b.label], b.params, b.instructions, relabel(b.terminator))
        for b in g.blocks
    )
    return replace(g, blocks=blocks, name=name or f.name, dialect_tag="raw")


# --------------------------------------------------------------------------
# projects

@dataclass(frozen=True)
class CallSite:
    context: str
    callee: str


@dataclass
class Project:
    """A set of functions, one of which is being hardened, plus the call
    sites that reach it and the test suite that exercises it."""

    functions: dict
    target: str
    call_sites: list = field(default_factory=list)
    test_suite: object = None
    manifest_path: Optional[str] = None
    reference_source: Optional[str] = None
    reference_dialect: str = "cm"

    def __post_init__(self):
        if self.target not in self.functions:
            raise ValueError(f"target {self.target!r} is not defined in the project")
        for cs in self.call_sites:
            if cs.callee not in self.functions:
                raise ValueError(f"call site {cs.context} reaches undefined {cs.callee!r}")

    @property
    def reference(self) -> Function:
        return self.functions[self.target]
