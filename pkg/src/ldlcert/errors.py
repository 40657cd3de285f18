"""Exception hierarchy shared by every module of the toolkit."""


class LdlcertError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(LdlcertError, ValueError):
    """A table or parameter set violates its documented invariants."""


class ShapeError(ValidationError):
    """Scenario or table shape does not match what an operation requires."""


class EmptyData(ValidationError):
    pass


class ZeroInputMass(ValidationError):
    def __init__(self, inputs):
        self.inputs = tuple(int(i) for i in inputs)
        super().__init__(f"input tuple {self.inputs} has zero probability mass")


class NoDetections(ValidationError):
    def __init__(self, inputs):
        self.inputs = tuple(int(i) for i in inputs)
        super().__init__(f"no joint detections for input tuple {self.inputs}")


class InvalidEfficiency(ValidationError):
    pass


class DegenerateBounds(ValidationError):
    pass


class SignalingInput(ValidationError):
    pass


class TooLarge(LdlcertError):
    pass


class IllFormedProblem(ValidationError):
    pass


class Unsolved(LdlcertError):
    """The LP solver stopped without a verified verdict (iteration cap or numerical trouble)."""


class ParseError(LdlcertError):
    pass
