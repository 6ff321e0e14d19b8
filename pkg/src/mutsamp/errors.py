"""Exception hierarchy shared by all subpackages."""


class MutsampError(Exception):
    """Base class for every domain error raised by this package."""


class SourceError(MutsampError):
    """A problem located in a source text (bench file or MHDL design)."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class HdlSyntaxError(SourceError):
    pass


class UnknownGateType(SourceError):
    pass


class UndrivenNet(SourceError):
    pass


class MultiplyDrivenNet(SourceError):
    pass


class CombinationalCycle(SourceError):
    def __init__(self, nets, line=None):
        self.nets = tuple(nets)
        super().__init__("combinational cycle through " + " -> ".join(self.nets), line)


class UndeclaredName(SourceError):
    pass


class UndrivenSignal(SourceError):
    pass


class MultipleDrivers(SourceError):
    pass


class WidthMismatch(MutsampError):
    """Operand or vector widths disagree."""


class StaleMutant(MutsampError):
    """The mutant does not belong to the design it is applied to."""


class ZeroSeed(MutsampError):
    pass


class AllEquivalent(MutsampError):
    """Mutation score undefined: every generated mutant is equivalent."""


class RangeError(MutsampError):
    pass


class ZeroBaseline(MutsampError):
    """Relative gain undefined because the random baseline coverage is zero."""


class EmptyMutantSet(MutsampError):
    pass


class NoApplicableOperators(MutsampError):
    pass


class ConfigError(MutsampError):
    pass
