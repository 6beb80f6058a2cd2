from typing import Any, Optional


class FaganException(Exception):
    """The base fagan Exception."""


class AudioFormatError(FaganException):
    """Error reading or writing an audio container"""

    def __init__(self, path: Any, reason: str) -> None:
        """Parameters
        ----------
        path
            File the error refers to (or None for in-memory buffers)
        reason
            Human readable description of what is wrong
        """
        self.path = path
        super().__init__('Audio format error{}: {}'.format(
            ' in {}'.format(path) if path is not None else '', reason))


class ConfigError(FaganException, ValueError):
    """Invalid configuration value or key"""

    def __init__(self, key: Optional[str], reason: str) -> None:
        self.key = key
        super().__init__('Invalid configuration{}: {}'.format(
            ' for {!r}'.format(key) if key else '', reason))


class SignalTooShortError(FaganException, ValueError):
    """Signal is shorter than an analysis window requires"""

    def __init__(self, needed: int, got: int) -> None:
        self.needed = needed
        self.got = got
        super().__init__('Signal too short: need at least {} samples, got {}'.format(needed, got))


class ShapeMismatchError(FaganException, ValueError):
    """Two arrays that must agree in shape do not"""

    def __init__(self, expected: Any, got: Any) -> None:
        super().__init__('Shape mismatch: expected {}, got {}'.format(expected, got))


class DegenerateKernelError(FaganException, ValueError):
    """Twin denominator vanished for the given kernel"""

    def __init__(self, position: int, value: float) -> None:
        self.position = position
        super().__init__(
            'Degenerate kernel: twin denominator {:.3g} at output position {}'.format(value, position))


class NumericalError(FaganException):
    """Non-finite values appeared in a computation"""


class DivergenceError(NumericalError):
    """Training loss became non-finite"""

    def __init__(self, step: int, term: str = 'loss') -> None:
        self.step = step
        super().__init__('Training diverged at step {} ({} is not finite)'.format(step, term))


class CheckpointError(FaganException):
    """Checkpoint file is malformed"""


class CodecError(FaganException):
    """External codec command failed"""


class SilentReferenceWarning(UserWarning):
    """Reference spectrogram has zero energy; relative terms are undefined"""


class UndefinedMetricWarning(UserWarning):
    """Metric is undefined for the given inputs and was reported as NaN"""


class FilterDesignWarning(UserWarning):
    """Filter bank parameters are outside the recommended range"""
