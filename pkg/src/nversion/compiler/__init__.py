"""Middle end (optimizer) and back end (stack-VM bytecode) of the toolchain."""

from dataclasses import dataclass, field

from ..mir import Function, validate_function
from .bytecode import (
    BcInstr, BytecodeUnit, canonical_disassembly, canonical_hash, lower_to_bytecode,
    parse_disassembly, verify_bytecode,
)
from .passes import BUGS, LEVELS, optimize


@dataclass(frozen=True)
class CompileResult:
    function: Function
    unit: BytecodeUnit
    diagnostics: tuple = field(default=())

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def compile_mir(f: Function, level: int = 0, inject: str = None) -> CompileResult:
    """optimize + lower_to_bytecode.  Diagnostics are empty on success, which
    is also what a miscompiling run reports."""
    g = optimize(f, level, inject)
    diags = tuple(str(d) for d in validate_function(g))
    unit = lower_to_bytecode(g)
    verify_bytecode(unit)
    return CompileResult(g, unit, diags)


__all__ = [
    "BUGS", "LEVELS", "BcInstr", "BytecodeUnit", "CompileResult", "canonical_disassembly",
    "canonical_hash", "compile_mir", "lower_to_bytecode", "optimize", "parse_disassembly",
    "verify_bytecode",
]
