"""Exception hierarchy shared by every module of the package."""


class AopiError(Exception):
    """Base class for all package errors."""


class ParameterError(AopiError, ValueError):
    """A physical or numerical parameter is outside its valid range."""


class CatalogError(AopiError, KeyError):
    """A resolution or model id does not exist in the scenario catalog."""

    def __str__(self):
        return str(self.args[0]) if self.args else "catalog error"


class StructuralError(AopiError, ValueError):
    """Decision dimensions do not match the scenario."""


class InstabilityError(AopiError, ArithmeticError):
    """FCFS service with arrival rate at or above the service rate."""


class DegenerateAccuracyError(AopiError, ValueError):
    """Recognition accuracy of zero makes the AoPI unbounded."""


class InfeasibleError(AopiError):
    """A resource subproblem has no feasible point."""

    def __init__(self, message, server=None):
        super().__init__(message)
        self.server = server


class SampleSizeError(AopiError):
    """Too few simulated frames for a statistical diagnostic."""


class CameraError(AopiError):
    """Wraps a per-camera failure with the camera index."""

    def __init__(self, camera, cause):
        super().__init__(f"camera {camera}: {cause}")
        self.camera = camera
        self.cause = cause


class SpecError(AopiError):
    """A scenario or trace file violates the documented schema."""

    def __init__(self, message, field=None, line=None, path=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.message = message
        self.field = field
        self.line = line
        self.path = path
