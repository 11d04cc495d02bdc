"""Exception hierarchy shared across the toolchain."""


class NVersionError(Exception):
    """Base class for every error raised by this package."""


class ParseError(NVersionError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class DialectError(ParseError):
    """A construct that only exists in the other source dialect."""


class TypeCheckError(ParseError):
    """Well-formed syntax that violates the source typing rules."""


class ValidationError(NVersionError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class LoweringError(NVersionError):
    pass


class ArgMismatch(NVersionError):
    pass


class MalformedBytecode(NVersionError):
    pass


class SignatureMismatch(NVersionError):
    pass


class ProviderError(NVersionError):
    def __init__(self, kind, message):
        self.kind = kind
        super().__init__(f"{kind}: {message}")


class EmptyVariantList(NVersionError):
    pass


class UnvalidatedVariant(NVersionError):
    pass


class PipelineError(NVersionError):
    pass


class ManifestError(NVersionError):
    pass
