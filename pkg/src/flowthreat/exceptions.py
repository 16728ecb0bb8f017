"""Exception hierarchy shared across the package."""


class FlowThreatError(Exception):
    """Base class for every error raised by flowthreat."""


class ArgumentError(FlowThreatError, ValueError):
    pass


class EmptyInput(FlowThreatError, ValueError):
    pass


class ArityError(FlowThreatError, ValueError):
    """A CSV row did not have the schema's cell count."""

    def __init__(self, path, line, n_cells, expected):
        self.path = str(path)
        self.line = line
        self.n_cells = n_cells
        self.expected = expected
        super().__init__(f"{self.path}:{line}: expected {expected} cells, got {n_cells}")


class CellTypeError(FlowThreatError, TypeError):
    """A cell could not be parsed as its column's kind."""

    def __init__(self, path, line, column, value):
        self.path = str(path)
        self.line = line
        self.column = column
        self.value = value
        super().__init__(f"{self.path}:{line}: column {column!r}: cannot parse {value!r}")


class LabelConflict(FlowThreatError, ValueError):
    pass


class SchemaMismatch(FlowThreatError, ValueError):
    pass


class SpecError(FlowThreatError, ValueError):
    """Invalid network layer specification."""


class ShapeError(FlowThreatError, ValueError):
    pass


class TrainModeError(FlowThreatError, ValueError):
    """Batch statistics requested on a single-row batch."""


class FormatError(FlowThreatError, ValueError):
    """A serialized artifact is truncated, of the wrong version, or inconsistent."""


class LengthMismatch(FlowThreatError, ValueError):
    pass


class SingleClassError(FlowThreatError, ValueError):
    pass
