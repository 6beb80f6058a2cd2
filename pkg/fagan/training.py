"""Toy-scale training harness: synthetic corpus, regression and adversarial
modes, held-out evaluation and ablation pairs"""
import copy
import logging
import math
from collections import OrderedDict
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import chirp
from tqdm import tqdm

from .audio import AudioBuffer
from .const import MEL_FMIN, N_MELS, PQMF_BANDS, PQMF_BETA, PQMF_TAPS, SAMPLE_RATE, TrainMode, TwinMode
from .exceptions import ConfigError, DivergenceError, NumericalError
from .heads import (feature_matching_head, lsgan_discriminator_head, lsgan_generator_head, mel_head,
                    mr_ri_head)
from .losses import LossWeights, MultiResConfig
from .metrics import lsd, lsd_bands, mcd
from .models import UPSAMPLE_FACTOR, DiscriminatorBank, ToyGenerator, polyphase_split
from .optim import Adam
from .spectral import StftConfig, complex_stft, log_mel, mel_filterbank
from .subband import design_pqmf, thirds_grouping
from .tensor import Tensor
from .utils import PathOrFile, make_rng, write_csv_rows

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ('step', 'total', 'mel', 'mr_ri', 'adv_g', 'fm', 'adv_d')
EVAL_COLUMNS = ('mel', 'mr_ri', 'lsd', 'lsd_low', 'lsd_mid', 'lsd_high', 'mcd')
HELD_OUT_OFFSET = 1000000000


class SyntheticCorpus(object):
    """Seeded mixtures of 1 to 5 sinusoids or linear chirps plus a noise floor.

    Frequencies are log-uniform in [fmin, fmax]; phases and amplitudes are
    uniform. Example i is a pure function of (seed, i); held-out examples
    come from a disjoint index range.
    """

    def __init__(self, seed: int = 0, sample_rate: int = SAMPLE_RATE, segment: int = 4096,
                 noise_floor: float = 0.02, fmin: float = 100.0, fmax: float = 6000.0) -> None:
        if segment < 1:
            raise ConfigError('train.segment', 'must be positive, got {}'.format(segment))
        if not 0.0 < fmin < fmax < sample_rate / 2.0:
            raise ConfigError(None, 'corpus band {}..{} Hz is outside (0, {})'.format(
                fmin, fmax, sample_rate / 2.0))
        self.seed = seed
        self.sample_rate = sample_rate
        self.segment = segment
        self.noise_floor = noise_floor
        self.fmin = fmin
        self.fmax = fmax

    def __repr__(self) -> str:
        return '<SyntheticCorpus seed={} segment={}>'.format(self.seed, self.segment)

    def _frequency(self, rng: np.random.Generator) -> float:
        return float(math.exp(rng.uniform(math.log(self.fmin), math.log(self.fmax))))

    def example(self, index: int) -> np.ndarray:
        rng = make_rng(self.seed * 7919 + index)
        t = np.arange(self.segment) / self.sample_rate
        out = np.zeros(self.segment)
        for _ in range(int(rng.integers(1, 6))):
            amplitude = rng.uniform(0.1, 1.0)
            phase = rng.uniform(0.0, 2.0 * math.pi)
            f0 = self._frequency(rng)
            if rng.random() < 0.5:
                out += amplitude * chirp(t, f0, t[-1], self._frequency(rng), method='linear',
                                         phi=math.degrees(phase))
            else:
                out += amplitude * np.sin(2.0 * math.pi * f0 * t + phase)
        out *= 0.5 / max(float(np.max(np.abs(out))), 1e-12)
        return out + self.noise_floor * rng.standard_normal(self.segment)

    def batch(self, step: int, size: int) -> List[np.ndarray]:
        return [self.example(step * size + i) for i in range(size)]

    def held_out(self, count: int) -> List[np.ndarray]:
        return [self.example(HELD_OUT_OFFSET + i) for i in range(count)]


class TrainConfig(object):
    """Settings of one toy training run.

    Parameters
    ----------
    mode : TrainMode or str
        'regression' (mel + MR-RI) or 'adversarial' (full generator objective)
    steps, batch : int
        Optimizer steps and examples per step
    lr : float
        Adam learning rate for generator and discriminators
    segment : int
        Samples per example, a multiple of 16
    upsampler : str
        'twin' or 'plain' generator upsampling stages
    twin_mode : TwinMode or str
        Denominator of the twin stages
    use_mr_ri : bool
        Include the multi-resolution RI term
    eval_every : int
        Held-out evaluation period in steps (0 evaluates only at start and end)
    fmin, fmax : float
        Mel filterbank range of the mel loss (fmax None means Nyquist)
    pqmf_k, pqmf_taps, pqmf_beta
        PQMF bank of the local discriminators (adversarial mode), grouped
        into low, mid and high thirds
    """

    def __init__(self, mode: Union[TrainMode, str] = TrainMode.REGRESSION, steps: int = 2000,
                 lr: float = 2e-4, batch: int = 8, segment: int = 4096,
                 upsampler: str = 'twin', twin_mode: Union[TwinMode, str] = TwinMode.ONES,
                 use_mr_ri: bool = True, eval_every: int = 100, noise_floor: float = 0.02,
                 seed: int = 0, held_out: int = 4, widths: Sequence[int] = (32, 16, 8),
                 weights: Optional[LossWeights] = None, stft: Optional[StftConfig] = None,
                 n_mels: int = N_MELS, fmin: float = MEL_FMIN, fmax: Optional[float] = None,
                 pqmf_k: int = PQMF_BANDS, pqmf_taps: int = PQMF_TAPS, pqmf_beta: float = PQMF_BETA,
                 resolutions: Optional[MultiResConfig] = None,
                 sample_rate: int = SAMPLE_RATE, progress: bool = False) -> None:
        self.mode = TrainMode(mode)
        self.steps = steps
        self.lr = lr
        self.batch = batch
        self.segment = segment
        self.upsampler = upsampler
        self.twin_mode = TwinMode(twin_mode)
        self.use_mr_ri = use_mr_ri
        self.eval_every = eval_every
        self.noise_floor = noise_floor
        self.seed = seed
        self.held_out = held_out
        self.widths = tuple(widths)
        self.weights = weights or LossWeights()
        self.stft = stft or StftConfig()
        self.n_mels = n_mels
        self.fmin = fmin
        self.fmax = fmax
        self.pqmf_k = pqmf_k
        self.pqmf_taps = pqmf_taps
        self.pqmf_beta = pqmf_beta
        self.resolutions = resolutions or MultiResConfig()
        self.sample_rate = sample_rate
        self.progress = progress
        self.validate()

    def __repr__(self) -> str:
        return '<TrainConfig {} steps={} batch={} upsampler={} mr_ri={}>'.format(
            self.mode.value, self.steps, self.batch, self.upsampler, self.use_mr_ri)

    def validate(self) -> None:
        for key, value in (('steps', self.steps), ('batch', self.batch), ('held_out', self.held_out)):
            if value < 1:
                raise ConfigError('train.' + key, 'must be positive, got {}'.format(value))
        if self.eval_every < 0:
            raise ConfigError('train.eval_every', 'must not be negative, got {}'.format(self.eval_every))
        if not self.lr > 0:
            raise ConfigError('train.lr', 'must be positive, got {}'.format(self.lr))
        if self.upsampler not in ('twin', 'plain'):
            raise ConfigError('train.upsampler', "must be 'twin' or 'plain', got {!r}".format(self.upsampler))
        if self.segment % UPSAMPLE_FACTOR:
            raise ConfigError('train.segment', 'must be a multiple of {}, got {}'.format(
                UPSAMPLE_FACTOR, self.segment))
        needed = self.stft.pad + 1
        if self.use_mr_ri or self.mode is TrainMode.ADVERSARIAL:
            needed = max(needed, self.resolutions.longest_window)
        if self.segment < needed:
            raise ConfigError('train.segment', 'need at least {} samples, got {}'.format(needed, self.segment))
        if self.noise_floor < 0:
            raise ConfigError('train.noise_floor', 'must not be negative, got {}'.format(self.noise_floor))
        if self.mode is TrainMode.ADVERSARIAL and self.pqmf_k < 3:
            raise ConfigError('pqmf.k', 'the local discriminators need at least 3 bands, got {}'.format(self.pqmf_k))
        if self.pqmf_taps % 2 or self.pqmf_taps < 2 * self.pqmf_k:
            raise ConfigError('pqmf.taps', 'must be even and >= 2 * pqmf.k, got {}'.format(self.pqmf_taps))
        if not self.pqmf_beta > 0:
            raise ConfigError('pqmf.beta', 'must be positive, got {}'.format(self.pqmf_beta))

    def replace(self, **changes: Any) -> 'TrainConfig':
        """Copy with some fields changed (validated again)."""
        other = copy.copy(self)
        for key, value in changes.items():
            if not hasattr(other, key):
                raise AttributeError('TrainConfig has no field {!r}'.format(key))
            setattr(other, key, value)
        other.mode = TrainMode(other.mode)
        other.twin_mode = TwinMode(other.twin_mode)
        other.validate()
        return other


class _Target(object):
    """One training or held-out example with its precomputed reference grids."""
    __slots__ = ('samples', 'low', 'mel', 'ri')

    def __init__(self, samples: np.ndarray, cfg: TrainConfig, filterbank: np.ndarray) -> None:
        self.samples = samples
        self.low = Tensor(polyphase_split(samples))
        self.mel = log_mel(samples, cfg.stft, filterbank)
        self.ri = [complex_stft(samples, r) for r in cfg.resolutions.resolutions]


class TrainingReport(object):
    """Per-step loss history plus held-out evaluations of one run."""

    def __init__(self, config: TrainConfig) -> None:
        self.config = config
        self.history = []  # type: List[Dict[str, float]]
        self.evaluations = []  # type: List[Tuple[int, Dict[str, float]]]

    def __repr__(self) -> str:
        return '<TrainingReport {} steps={}>'.format(self.config.mode.value, len(self.history))

    @property
    def initial_eval(self) -> Dict[str, float]:
        return self.evaluations[0][1]

    @property
    def final_eval(self) -> Dict[str, float]:
        return self.evaluations[-1][1]

    def losses(self, key: str = 'total') -> np.ndarray:
        return np.array([row[key] for row in self.history])

    def moving_average(self, step: int, window: int = 100, key: str = 'total') -> float:
        """Mean of key over the window steps ending at step (1-based)."""
        values = self.losses(key)[max(0, step - window):step]
        return float(np.mean(values))

    def to_csv(self, out: PathOrFile) -> None:
        write_csv_rows(HISTORY_COLUMNS, ([row[c] for c in HISTORY_COLUMNS] for row in self.history), out)

    def eval_to_csv(self, out: PathOrFile) -> None:
        rows = ([step] + [values[c] for c in EVAL_COLUMNS] for step, values in self.evaluations)
        write_csv_rows(('step',) + EVAL_COLUMNS, rows, out)


class _Trainer(object):

    def __init__(self, corpus: SyntheticCorpus, cfg: TrainConfig) -> None:
        self.corpus = corpus
        self.cfg = cfg
        self.filterbank = mel_filterbank(cfg.sample_rate, cfg.stft.fft_size, cfg.n_mels, cfg.fmin, cfg.fmax)
        self.generator = ToyGenerator(widths=cfg.widths, upsampler=cfg.upsampler, twin_mode=cfg.twin_mode,
                                      seed=cfg.seed)
        self.g_opt = Adam(self.generator.parameters(), lr=cfg.lr)
        self.bank = None  # type: Optional[DiscriminatorBank]
        if cfg.mode is TrainMode.ADVERSARIAL:
            pqmf = design_pqmf(cfg.pqmf_k, cfg.pqmf_taps, cfg.pqmf_beta)
            self.bank = DiscriminatorBank(cfg.resolutions.resolutions, pqmf, thirds_grouping(pqmf.num_bands),
                                          seed=cfg.seed + 5000, sample_rate=cfg.sample_rate)
            self.d_opt = Adam(self.bank.parameters(), lr=cfg.lr)
        self.held_out = [_Target(s, cfg, self.filterbank) for s in corpus.held_out(cfg.held_out)]

    def spectral_terms(self, y: np.ndarray, target: _Target) -> Tuple[float, float, np.ndarray]:
        """(mel, mr_ri, weighted gradient of both) for one generated example."""
        w = self.cfg.weights
        mel, grad = mel_head(target.mel, y, self.cfg.stft, self.filterbank)
        grad = w.lambda_mel * grad
        mr_ri = 0.0
        if self.cfg.use_mr_ri:
            mr_ri, ri_grad = mr_ri_head(target.ri, y, self.cfg.resolutions.resolutions)
            grad += w.lambda_ri * ri_grad
        return mel, mr_ri, grad

    def regression_step(self, targets: List[_Target]) -> Dict[str, float]:
        w = self.cfg.weights
        n = len(targets)
        sums = OrderedDict((k, 0.0) for k in HISTORY_COLUMNS[1:])
        self.g_opt.zero_grad()
        for target in targets:
            y = self.generator.forward(target.low)
            mel, mr_ri, grad = self.spectral_terms(y, target)
            self.generator.backward(grad / n)
            sums['mel'] += mel / n
            sums['mr_ri'] += mr_ri / n
        sums['total'] = w.lambda_mel * sums['mel'] + w.lambda_ri * sums['mr_ri']
        self.g_opt.step()
        return sums

    def adversarial_step(self, targets: List[_Target]) -> Dict[str, float]:
        assert self.bank is not None
        w = self.cfg.weights
        n = len(targets)
        sums = OrderedDict((k, 0.0) for k in HISTORY_COLUMNS[1:])

        # discriminator update on detached generator outputs
        fakes = [self.generator.forward(t.low) for t in targets]
        self.d_opt.zero_grad()
        for target, fake in zip(targets, fakes):
            # the real half of the LSGAN loss has the same form as the generator loss
            real_out = self.bank.forward(target.samples)
            self.bank.backward([(lsgan_generator_head(out.score)[1] / n, ()) for out in real_out])
            fake_out = self.bank.forward(fake)
            fake_grads = []
            for real, out in zip(real_out, fake_out):
                loss, _, g_fake = lsgan_discriminator_head(real.score, out.score)
                sums['adv_d'] += loss / n
                fake_grads.append((g_fake / n, ()))
            self.bank.backward(fake_grads)
        self.d_opt.step()

        # generator update through the refreshed discriminators
        self.g_opt.zero_grad()
        for target in targets:
            y = self.generator.forward(target.low)
            mel, mr_ri, grad = self.spectral_terms(y, target)
            real_out = self.bank.forward(target.samples)
            fake_out = self.bank.forward(y)
            d_grads = []
            for real, out in zip(real_out, fake_out):
                adv, g_score = lsgan_generator_head(out.score)
                fm, g_feats = feature_matching_head(real.features, out.features)
                sums['adv_g'] += adv / n
                sums['fm'] += fm / n
                d_grads.append((w.lambda_g * g_score, [w.lambda_fm * g for g in g_feats]))
            grad = grad + self.bank.backward(d_grads)
            self.generator.backward(grad / n)
            sums['mel'] += mel / n
            sums['mr_ri'] += mr_ri / n
        self.bank.zero_grad()
        self.g_opt.step()
        sums['total'] = (w.lambda_g * sums['adv_g'] + w.lambda_ri * sums['mr_ri']
                         + w.lambda_mel * sums['mel'] + w.lambda_fm * sums['fm'])
        return sums

    def evaluate(self) -> Dict[str, float]:
        """Held-out metrics averaged over the held-out examples."""
        totals = OrderedDict((k, 0.0) for k in EVAL_COLUMNS)
        for target in self.held_out:
            y = self.generator.forward(target.low)
            mel, _ = mel_head(target.mel, y, self.cfg.stft, self.filterbank)
            mr_ri, _ = mr_ri_head(target.ri, y, self.cfg.resolutions.resolutions)
            ref = AudioBuffer(target.samples, self.cfg.sample_rate)
            gen = AudioBuffer(y, self.cfg.sample_rate)
            low, mid, high = lsd_bands(ref, gen, self.cfg.stft)
            values = (mel, mr_ri, lsd(ref, gen, self.cfg.stft), low, mid, high, mcd(ref, gen, self.cfg.stft))
            for key, value in zip(EVAL_COLUMNS, values):
                totals[key] += value / len(self.held_out)
        return totals

    def run(self) -> TrainingReport:
        cfg = self.cfg
        report = TrainingReport(cfg)
        step_fn = self.adversarial_step if cfg.mode is TrainMode.ADVERSARIAL else self.regression_step
        logger.info('training %r on %r', cfg, self.corpus)
        report.evaluations.append((0, self.evaluate()))
        logger.info('step 0: held-out mel %.4f', report.initial_eval['mel'])

        for step in tqdm(range(1, cfg.steps + 1), disable=not cfg.progress, desc='train'):
            targets = [_Target(s, cfg, self.filterbank) for s in self.corpus.batch(step - 1, cfg.batch)]
            try:
                values = step_fn(targets)
            except NumericalError as ex:
                raise DivergenceError(step, 'activation') from ex
            for key, value in values.items():
                if not math.isfinite(value):
                    raise DivergenceError(step, key)
            row = OrderedDict([('step', step)])  # type: Dict[str, Any]
            row.update(values)
            report.history.append(row)
            logger.debug('step %d: %s', step, ', '.join('{}={:.5g}'.format(k, v) for k, v in values.items()))

            if step == cfg.steps or (cfg.eval_every and step % cfg.eval_every == 0):
                evaluation = self.evaluate()
                report.evaluations.append((step, evaluation))
                logger.info('step %d: held-out mel %.4f, lsd %.4f', step, evaluation['mel'], evaluation['lsd'])
        logger.info('finished %d steps, held-out mel %.4f -> %.4f', cfg.steps,
                    report.initial_eval['mel'], report.final_eval['mel'])
        return report


def train_toy(dataset: Optional[SyntheticCorpus] = None, cfg: Optional[TrainConfig] = None,
              return_generator: bool = False) -> Any:
    """Trains a ToyGenerator on dataset and returns its TrainingReport (with
    the trained generator as well when return_generator is set).

    Raises DivergenceError with the step index when a loss or activation
    stops being finite.
    """
    cfg = cfg or TrainConfig()
    dataset = dataset or SyntheticCorpus(cfg.seed, cfg.sample_rate, cfg.segment, cfg.noise_floor)
    if dataset.segment != cfg.segment:
        raise ConfigError('train.segment', 'corpus segment {} differs from {}'.format(dataset.segment, cfg.segment))
    trainer = _Trainer(dataset, cfg)
    report = trainer.run()
    if return_generator:
        return report, trainer.generator
    return report


ABLATIONS = ('tdconv', 'mrri')


class AblationReport(object):
    """Paired held-out metrics of a baseline run and its ablated twin."""

    def __init__(self, ablation: str, baseline: TrainingReport, ablated: TrainingReport) -> None:
        self.ablation = ablation
        self.baseline = baseline
        self.ablated = ablated

    def __repr__(self) -> str:
        return '<AblationReport {}>'.format(self.ablation)

    def rows(self) -> List[Tuple[str, float, float]]:
        return [(key, self.baseline.final_eval[key], self.ablated.final_eval[key]) for key in EVAL_COLUMNS]

    def to_csv(self, out: PathOrFile) -> None:
        write_csv_rows(('metric', 'full', 'w/o ' + self.ablation), self.rows(), out)


def run_ablation(cfg: TrainConfig, ablate: str, dataset: Optional[SyntheticCorpus] = None) -> AblationReport:
    """Trains cfg and the ablated variant with identical seeds and data.

    'tdconv' swaps the twin upsampling stages for plain transposed
    convolutions; 'mrri' drops the multi-resolution RI term.
    """
    if ablate not in ABLATIONS:
        raise ConfigError('ablate', 'must be one of {}, got {!r}'.format(ABLATIONS, ablate))
    changes = {'upsampler': 'plain'} if ablate == 'tdconv' else {'use_mr_ri': False}
    ablated_cfg = cfg.replace(**changes)
    logger.info('ablation %s: baseline run', ablate)
    baseline = train_toy(dataset, cfg)
    logger.info('ablation %s: ablated run', ablate)
    ablated = train_toy(dataset, ablated_cfg)
    return AblationReport(ablate, baseline, ablated)
