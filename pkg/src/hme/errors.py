"""Exception types.  Each carries a short stable ``code`` used by the CLI and the map DSL."""


class HMEError(Exception):
    code = "error"


class DimensionError(HMEError, ValueError):
    code = "dimension"


class NotHermitianError(HMEError, ValueError):
    code = "not-hermitian"


class NotDensityError(HMEError, ValueError):
    code = "not-density"


class NotHermitianPreservingError(HMEError, ValueError):
    code = "not-hermitian-preserving"


class SingularMapError(HMEError, ValueError):
    code = "singular-map"


class ParameterError(HMEError, ValueError):
    code = "bad-parameter"


class ScheduleError(HMEError, ValueError):
    code = "schedule"


class PreconditionError(HMEError, ValueError):
    code = "precondition"


class ParseError(HMEError, ValueError):
    code = "parse"


class InvariantError(HMEError, RuntimeError):
    """A numerical invariant (trace, hermiticity, norm bound) was violated."""

    code = "invariant"
