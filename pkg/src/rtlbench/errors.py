"""Exception hierarchy shared across the pipeline stages."""


class RtlBenchError(Exception):
    """Base class for all toolkit errors."""


class CorpusError(RtlBenchError):
    """Corpus root missing or unreadable."""


class ManifestError(RtlBenchError):
    """Project manifest cannot be parsed or is structurally invalid."""


class PreprocessError(RtlBenchError):
    """Include/macro expansion failed (missing file, cycle, bad directive)."""


class VerilogSyntaxError(RtlBenchError):
    """Source text cannot be parsed into a source unit."""

    def __init__(self, message, pos=None, line=None, col=None):
        super().__init__(message)
        self.pos = pos
        self.line = line
        self.col = col

    def __str__(self):
        loc = ""
        if self.line is not None:
            loc = f" at line {self.line}" + (f", col {self.col}" if self.col is not None else "")
        return super().__str__() + loc


class ElaborationError(RtlBenchError):
    """Parsed design uses a construct outside the synthesizable subset."""


class SimulationError(RtlBenchError):
    """Stimulus malformed or netlist inconsistent during simulation."""


class InterfaceMismatchError(RtlBenchError):
    """Candidate ports do not line up with the golden module interface."""


class DedupError(RtlBenchError):
    """Similarity machinery misused (empty design, mismatched signatures)."""


class TaskError(RtlBenchError):
    """Task construction failed for a parsed design."""
