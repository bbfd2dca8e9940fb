"""Exception hierarchy shared by every stage of the pipeline.

Each error carries a CLI exit code so ``vigil`` can map failures to the
documented process status (2 config, 3 data, 4 numerical).
"""


class VigilError(Exception):
    exit_code = 3


class ConfigError(VigilError):
    exit_code = 2


class DataError(VigilError):
    exit_code = 3


class NumericalError(VigilError):
    exit_code = 4


# core_signal
class InvalidRecording(DataError):
    pass


class InvalidBand(DataError):
    pass


class UpsampleUnsupported(DataError):
    pass


class RecordingTooShort(DataError):
    pass


# eog_separation
class LengthMismatch(DataError):
    pass


class RankDeficient(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    def __init__(self, message, iterations=None, delta=None):
        super().__init__(message)
        self.iterations = iterations
        self.delta = delta


class ZeroVariance(NumericalError):
    pass


# eye_events
class SignalTooShort(DataError):
    pass


class DegenerateSignal(DataError):
    pass


# eeg_pipeline
class NonpositiveVariance(NumericalError):
    pass


# labels_perclos
class EmptyInterval(DataError):
    pass


class OutOfRange(DataError):
    pass


# models
class DegenerateLabels(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class AlignmentMismatch(DataError):
    pass


class NonConvergence(NumericalError):
    def __init__(self, message, grad_norm=None):
        super().__init__(message)
        self.grad_norm = grad_norm


class SingularPrecision(NumericalError):
    pass


class SessionTooShort(DataError):
    pass


# eval_harness
class UnevenSessions(DataError):
    pass


class EmptyInput(DataError):
    pass


# synth_oracle
class InvalidConfig(ConfigError):
    pass
