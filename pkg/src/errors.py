"""Error taxonomy shared by the library and the command line.

Every error carries a stable ``kind`` used by the sweep harness to attribute
failures, and an ``exit_code`` used by ``main.py``.
"""


class ModFrftError(Exception):
    kind = "error"
    exit_code = 1


# -------------------- Validation -------------------- #

class InvalidAngleError(ModFrftError, ValueError):
    kind = "invalid-angle"


class DegenerateAngleError(ModFrftError, ValueError):
    """Raised when a kernel formula is evaluated at α = kπ (the kernel is a Dirac there)."""
    kind = "degenerate-angle"


class InvalidSignalError(ModFrftError, ValueError):
    kind = "invalid-signal"


class InvalidThresholdError(ModFrftError, ValueError):
    kind = "invalid-threshold"


class NonFiniteInputError(ModFrftError, ValueError):
    kind = "non-finite-input"


class SequenceTooShortError(ModFrftError, ValueError):
    kind = "sequence-too-short"


class LengthMismatchError(ModFrftError, ValueError):
    kind = "length-mismatch"


class FrftMismatchError(ModFrftError, ValueError):
    kind = "frft-mismatch"


class InsufficientSamplesError(ModFrftError, ValueError):
    kind = "insufficient-samples"


class WindowOverlapError(ModFrftError, ValueError):
    kind = "window-overlaps-band"


class InvalidCriterionError(ModFrftError, ValueError):
    kind = "invalid-criterion"


class ZeroReferenceError(ModFrftError, ValueError):
    kind = "zero-reference"


# -------------------- Command line -------------------- #

class ConfigError(ModFrftError, ValueError):
    kind = "config"
    exit_code = 2

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class SchemaError(ModFrftError, ValueError):
    kind = "schema"
    exit_code = 3


# -------------------- Pipeline -------------------- #

class CriterionViolationError(ModFrftError):
    kind = "criterion-violation"
    exit_code = 4

    def __init__(self, message, required_q):
        super().__init__(message)
        self.required_q = required_q


class EstimationError(ModFrftError):
    kind = "estimation-failure"
    exit_code = 5

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class AnnihilationFailureError(EstimationError):
    kind = "annihilation-failure"


class RankDeficiencyError(EstimationError):
    kind = "rank-deficiency"


class OffCircleRootError(EstimationError):
    kind = "off-circle-root"


class RootConvergenceError(EstimationError):
    kind = "root-non-convergence"


class SingularSystemError(EstimationError):
    kind = "singular-system"


class ResidualSnapError(EstimationError):
    kind = "residual-snap"
