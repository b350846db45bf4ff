"""Exception hierarchy shared by every triplex module."""


class TriplexError(Exception):
    """Base class for all errors raised by triplex."""


class InputError(TriplexError, ValueError):
    """Malformed user input (bad table, bad CSV, bad parameters)."""


class ComputationError(TriplexError, ArithmeticError):
    """A numerical procedure could not produce a valid result."""


class EmptyCell(InputError):
    def __init__(self, cell=None, message=None):
        self.cell = cell
        self.link_index = None
        super().__init__(message or f"cell {cell} has no samples")


class MissingCell(InputError):
    def __init__(self, cell):
        self.cell = cell
        super().__init__(f"cell {cell} is missing from the table")


class InvalidProbability(InputError):
    def __init__(self, value, message=None):
        self.value = value
        self.link_index = None
        super().__init__(message or f"probability argument {value!r} outside [0, 1]")


class ChainTypeError(InputError):
    """Adjacent links of a chain do not type-check."""


class NegativeSlack(InputError):
    pass


class EmptyPanel(InputError):
    pass


class DegenerateFit(ComputationError):
    pass


class DomainError(InputError):
    """A sample value lies outside the support of the requested family."""


class DegenerateSample(ComputationError):
    pass


class DensityUnderflow(ComputationError):
    pass


class BootstrapFailure(ComputationError):
    pass


class DimensionMismatch(InputError):
    pass


class SizeMismatch(InputError):
    pass


class NumericalUnderflow(ComputationError):
    pass


class ZeroTrueTau(InputError):
    pass
