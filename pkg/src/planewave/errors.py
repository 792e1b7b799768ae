"""Exception hierarchy.

Two families map onto the CLI exit codes: ``ValidationError`` (bad input,
exit 2) and ``NumericalError`` (a computation failed, exit 3).
"""


class PlaneWaveError(Exception):
    pass


class ValidationError(PlaneWaveError, ValueError):
    pass


class NumericalError(PlaneWaveError, ArithmeticError):
    pass


class NetworkError(ValidationError):
    """Topology problem, e.g. a disconnected bus."""


class DegenerateBranchError(ValidationError):
    def __init__(self, branch, message=None):
        self.branch = branch
        super().__init__(message or f"branch {branch} has zero impedance")


class CaseFileError(ValidationError):
    def __init__(self, message, location=None, line=None):
        self.location = location
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if location:
            where.append(location)
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ProtocolError(ValidationError):
    """Event sequence is inconsistent (e.g. clearing an inactive fault)."""


class UnknownCaseError(ValidationError, LookupError):
    pass


class PowerFlowDivergence(NumericalError):
    def __init__(self, iterations, mismatch):
        self.iterations = iterations
        self.mismatch = mismatch
        super().__init__(
            f"power flow did not converge in {iterations} iterations "
            f"(max mismatch {mismatch:.3e} pu)"
        )


class SingularFoldError(NumericalError):
    pass


class SingularMomentumError(NumericalError):
    pass


class NumericalBlowup(NumericalError):
    def __init__(self, t_last):
        self.t_last = t_last
        super().__init__(f"state became non-finite after t = {t_last:.6f} s")


class MeasurementError(NumericalError):
    pass


class CalibrationError(NumericalError):
    pass


class DegenerateSignalError(NumericalError):
    pass


class IngestionError(ValidationError):
    pass
