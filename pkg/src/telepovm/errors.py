"""Exception hierarchy shared by all telepovm modules."""


class TelepovmError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(TelepovmError, ValueError):
    """Input failed a normalization or range check."""


class LabelError(TelepovmError, KeyError):
    """A qubit label is unknown to the state it was looked up in."""

    def __str__(self):
        return Exception.__str__(self)


class LabelCollision(LabelError):
    """Two registers share a label and cannot be combined."""


class ShapeError(TelepovmError, ValueError):
    """Operator dimension does not match the number of target qubits."""


class HermiticityError(TelepovmError, ValueError):
    pass


class NumericalError(TelepovmError, ArithmeticError):
    """Probabilities drifted too far from unit sum to be renormalized."""


class InfeasibleX(ValidationError):
    """POVM weight x outside [x_min, 4]; the inconclusive element would not be PSD."""


class NotApplicable(TelepovmError):
    pass


class DerivationFailure(TelepovmError, RuntimeError):
    """No Pauli pre-correction / distortion pair reproduces a collapsed branch."""


class TrialError(TelepovmError):
    """A trial failed; ``stage`` names the protocol step that raised."""

    def __init__(self, stage: str, trial_id: int, cause: Exception):
        self.stage = stage
        self.trial_id = trial_id
        self.cause = cause
        super().__init__(f"trial {trial_id} failed at stage '{stage}': {cause}")
