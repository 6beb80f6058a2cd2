"""fagan constants"""
from enum import Enum, unique
from typing import Tuple

from importlib.metadata import version, PackageNotFoundError

try:
    __version__ = version('python-fagan')
except PackageNotFoundError:
    # running from a source checkout
    __version__ = '0.1.0'

# environment
CONFIG_ENV = 'FAGAN_CONFIG'
LONG_TESTS_ENV = 'FAGAN_LONG_TESTS'

# signal analysis defaults (22.05 kHz speech vocoder setup)
SAMPLE_RATE = 22050
FFT_SIZE = 1024
WINDOW_SIZE = 1024
HOP_SIZE = 256
N_MELS = 80
MEL_FMIN = 0.0
LOG_FLOOR = 1e-5
PCM16_SCALE = 32768.0

# global discriminator / MR-RI resolutions: (fft, window, hop)
MR_RI_RESOLUTIONS: Tuple[Tuple[int, int, int], ...] = (
    (2048, 2048, 240),
    (1024, 1024, 120),
    (512, 512, 50),
)

# twin deconvolution
TWIN_EPS = 1e-12

# PQMF
PQMF_BANDS = 12
PQMF_TAPS = 96
PQMF_BETA = 9.0
PQMF_GROUPS: Tuple[Tuple[int, int], ...] = ((0, 4), (4, 8), (8, 12))

# loss weights (lambda_g, lambda_ri, lambda_mel, lambda_fm)
LAMBDA_G = 1.0
LAMBDA_RI = 1.0
LAMBDA_MEL = 45.0
LAMBDA_FM = 2.0

# metrics
MCD_COEFFS = 13
LSD_FLOOR = 1e-8
F0_MIN = 50.0
F0_MAX = 1000.0
YIN_THRESHOLD = 0.15
F0_FRAME = 0.025
F0_HOP = 0.010

# augmentation
NOISE_SNR_RANGE = (28.0, 40.0)
CODEC_CUTOFF = 8000.0
CODEC_BITS = 8
MU_LAW = 255.0

# optimizer
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# gradient checks
GRAD_EPS = 1e-5
GRAD_TOLERANCE = 1e-4

# checkpoint container
CHECKPOINT_MAGIC = b'FAGN'
CHECKPOINT_VERSION = 1


@unique
class Window(Enum):
    """Analysis windows supported by the STFT"""
    HANN = 'hann'
    RECTANGULAR = 'rectangular'


@unique
class TwinMode(Enum):
    """Denominator branch of the twin transposed convolution"""
    NONE = 'none'
    ONES = 'ones'
    ABS_WEIGHT = 'abs_weight'


@unique
class LayerKind(Enum):
    """Layer kinds of the manual-backprop net"""
    CONV1D = 'conv1d'
    TCONV1D = 'tconv1d'
    TWIN_TCONV1D = 'twin_tconv1d'
    DENSE = 'dense'
    SNAKE = 'snake'
    LEAKY_RELU = 'leaky_relu'
    TANH = 'tanh'
    CONV2D = 'conv2d'


@unique
class TrainMode(Enum):
    """Objective used by the toy training harness"""
    REGRESSION = 'regression'
    ADVERSARIAL = 'adversarial'


@unique
class AudioFormat(Enum):
    """Sample formats written by save_wav"""
    PCM16 = 'pcm16'
    FLOAT32 = 'float32'


@unique
class ExitCode(Enum):
    """Process exit codes of the command line interface"""
    SUCCESS = 0
    USAGE = 2
    INPUT_FORMAT = 3
    NUMERICAL = 4
