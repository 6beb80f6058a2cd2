"""RunConfig: key=value run configuration files"""
import logging
import os
from collections import OrderedDict
from typing import Any, Dict, Optional, Tuple

from .const import (CONFIG_ENV, FFT_SIZE, HOP_SIZE, LAMBDA_FM, LAMBDA_G, LAMBDA_MEL, LAMBDA_RI,
                    MEL_FMIN, N_MELS, PQMF_BANDS, PQMF_BETA, PQMF_TAPS, SAMPLE_RATE, WINDOW_SIZE,
                    TrainMode, TwinMode, Window)
from .exceptions import ConfigError
from .losses import LossWeights
from .spectral import StftConfig, mel_filterbank
from .subband import PqmfBank, design_pqmf
from .training import TrainConfig

logger = logging.getLogger(__name__)

# key -> default; the default's type is the key's type (None means optional float)
DEFAULTS = OrderedDict([
    ('sample_rate', SAMPLE_RATE),
    ('seed', 0),
    ('stft.fft_size', FFT_SIZE),
    ('stft.window_size', WINDOW_SIZE),
    ('stft.hop_size', HOP_SIZE),
    ('stft.window', Window.HANN.value),
    ('stft.center', True),
    ('mel.n_mels', N_MELS),
    ('mel.fmin', MEL_FMIN),
    ('mel.fmax', None),
    ('pqmf.k', PQMF_BANDS),
    ('pqmf.taps', PQMF_TAPS),
    ('pqmf.beta', PQMF_BETA),
    ('loss.lambda_g', LAMBDA_G),
    ('loss.lambda_ri', LAMBDA_RI),
    ('loss.lambda_mel', LAMBDA_MEL),
    ('loss.lambda_fm', LAMBDA_FM),
    ('train.mode', TrainMode.REGRESSION.value),
    ('train.steps', 2000),
    ('train.lr', 2e-4),
    ('train.batch', 8),
    ('train.segment', 4096),
    ('train.twin_mode', TwinMode.ONES.value),
    ('train.upsampler', 'twin'),
    ('train.use_mr_ri', True),
    ('train.eval_every', 100),
    ('train.noise_floor', 0.02),
])  # type: Dict[str, Any]

_NONE_WORD = 'none'


def _parse(key: str, text: str) -> Any:
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in ('true', 'yes', 'on', '1'):
                return True
            if lowered in ('false', 'no', 'off', '0'):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float) or default is None:
            if default is None and text.lower() == _NONE_WORD:
                return None
            return float(text)
    except ValueError:
        raise ConfigError(key, 'cannot parse {!r}'.format(text)) from None
    return text


def _format(value: Any) -> str:
    if value is None:
        return _NONE_WORD
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


class RunConfig(object):
    """Effective configuration of a run: every known key, defaults filled in.

    Values are validated against the invariants of the objects they build
    on construction; violations raise ConfigError.
    """

    def __init__(self, values: Optional[Dict[str, Any]] = None) -> None:
        self._values = OrderedDict(DEFAULTS)  # type: Dict[str, Any]
        for key, value in (values or {}).items():
            if key not in DEFAULTS:
                raise ConfigError(key, 'unknown key')
            self._values[key] = _parse(key, value) if isinstance(value, str) else value
        self.validate()

    def __repr__(self) -> str:
        changed = ['{}={}'.format(k, _format(v)) for k, v in self._values.items() if v != DEFAULTS[k]]
        return '<RunConfig {}>'.format(' '.join(changed) or 'defaults')

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self._values == other._values

    def __getitem__(self, key: str) -> Any:
        return self._values[key]

    def as_dict(self) -> Dict[str, Any]:
        return OrderedDict(self._values)

    @classmethod
    def loads(cls, text: str) -> 'RunConfig':
        """Parses key=value lines; '#' starts a comment, blank lines are skipped."""
        values = OrderedDict()  # type: Dict[str, Any]
        for number, raw in enumerate(text.splitlines(), 1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition('=')
            key = key.strip()
            if not sep or not key:
                raise ConfigError(None, 'line {}: expected key=value, got {!r}'.format(number, raw))
            if key not in DEFAULTS:
                raise ConfigError(key, 'unknown key on line {}'.format(number))
            if key in values:
                raise ConfigError(key, 'duplicate key on line {}'.format(number))
            values[key] = _parse(key, value.strip())
        return cls(values)

    @classmethod
    def load(cls, path: str) -> 'RunConfig':
        with open(path, encoding='utf-8') as fh:
            return cls.loads(fh.read())

    def dumps(self) -> str:
        return ''.join('{}={}\n'.format(key, _format(self._values[key])) for key in sorted(self._values))

    def save(self, path: str) -> None:
        with open(path, 'w', encoding='utf-8') as fh:
            fh.write(self.dumps())

    def replace(self, **changes: Any) -> 'RunConfig':
        """Copy with keys changed; dots in keys are written as '__' (train__steps=10)."""
        values = self.as_dict()
        for name, value in changes.items():
            values[name.replace('__', '.')] = value
        return RunConfig(values)

    def validate(self) -> None:
        if self['sample_rate'] <= 0:
            raise ConfigError('sample_rate', 'must be positive, got {}'.format(self['sample_rate']))
        self.stft_config()
        n_mels, fmin, fmax = self.mel_params()
        mel_filterbank(self['sample_rate'], self['stft.fft_size'], n_mels, fmin, fmax)
        k, taps = self['pqmf.k'], self['pqmf.taps']
        if k < 2:
            raise ConfigError('pqmf.k', 'need at least 2 bands, got {}'.format(k))
        if taps % 2 or taps < 2 * k:
            raise ConfigError('pqmf.taps', 'must be even and >= 2 * pqmf.k, got {}'.format(taps))
        if not self['pqmf.beta'] > 0:
            raise ConfigError('pqmf.beta', 'must be positive, got {}'.format(self['pqmf.beta']))
        self.loss_weights()
        for key, enum in (('train.mode', TrainMode), ('train.twin_mode', TwinMode)):
            try:
                enum(self[key])
            except ValueError:
                raise ConfigError(key, 'unknown value {!r}'.format(self[key])) from None
        self.train_config()

    def stft_config(self) -> StftConfig:
        return StftConfig(self['stft.fft_size'], self['stft.window_size'], self['stft.hop_size'],
                          self['stft.window'], self['stft.center'])

    def mel_params(self) -> Tuple[int, float, Optional[float]]:
        """(n_mels, fmin, fmax); fmax None means Nyquist."""
        return self['mel.n_mels'], self['mel.fmin'], self['mel.fmax']

    def pqmf_bank(self) -> PqmfBank:
        return design_pqmf(self['pqmf.k'], self['pqmf.taps'], self['pqmf.beta'])

    def loss_weights(self) -> LossWeights:
        return LossWeights(self['loss.lambda_g'], self['loss.lambda_ri'], self['loss.lambda_mel'],
                           self['loss.lambda_fm'])

    def train_config(self, **overrides: Any) -> TrainConfig:
        kwargs = dict(
            mode=self['train.mode'], steps=self['train.steps'], lr=self['train.lr'],
            batch=self['train.batch'], segment=self['train.segment'], upsampler=self['train.upsampler'],
            twin_mode=self['train.twin_mode'], use_mr_ri=self['train.use_mr_ri'],
            eval_every=self['train.eval_every'], noise_floor=self['train.noise_floor'], seed=self['seed'],
            weights=self.loss_weights(), stft=self.stft_config(), n_mels=self['mel.n_mels'],
            fmin=self['mel.fmin'], fmax=self['mel.fmax'], pqmf_k=self['pqmf.k'], pqmf_taps=self['pqmf.taps'],
            pqmf_beta=self['pqmf.beta'], sample_rate=self['sample_rate'])
        kwargs.update(overrides)
        return TrainConfig(**kwargs)


def load_run_config(path: Optional[str] = None) -> RunConfig:
    """Loads path, else the file named by FAGAN_CONFIG, else the defaults."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return RunConfig()
    logger.info('loading configuration from %s', path)
    return RunConfig.load(path)
