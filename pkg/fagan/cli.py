"""fagan command line interface"""
import argparse
import logging
import math
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .audio import AudioBuffer, load_wav, save_wav
from .augment import add_noise, external_codec, harmonic_shift, lossy_compress_proxy, read_sidecar, write_sidecar
from .checkpoint import save_checkpoint
from .config import RunConfig, load_run_config
from .const import CODEC_BITS, CODEC_CUTOFF, GRAD_TOLERANCE, ExitCode, __version__
from .exceptions import (AudioFormatError, CheckpointError, CodecError, ConfigError, NumericalError,
                         ShapeMismatchError, SignalTooShortError)
from .gradcheck import run_grad_suite
from .losses import MultiResConfig, mr_ri_loss, ri_loss
from .metrics import METRIC_COLUMNS, aliasing_energy, evaluate_directories, evaluate_pair
from .spectral import mel_spectrogram, spectrogram_to_csv, stft, write_pgm
from .subband import SubbandSignals, pqmf_analysis, pqmf_synthesis
from .training import ABLATIONS, EVAL_COLUMNS, run_ablation, train_toy
from .upsample import DeconvSpec, image_frequencies, upsample_pipeline
from .utils import format_value, write_csv_grid, write_csv_rows

logger = logging.getLogger(__name__)

DEMO_MODES = ('plain', 'twin', 'twin_lowpass')


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _out(args: argparse.Namespace, name: str) -> str:
    return os.path.join(args.out_dir, name)


def _print_table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    cells = [list(header)] + [[format_value(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    for row in cells:
        print('  '.join(c.ljust(w) for c, w in zip(row, widths)).rstrip())


def cmd_stft(args: argparse.Namespace, cfg: RunConfig) -> None:
    spec = stft(load_wav(args.input), cfg.stft_config())
    spectrogram_to_csv(spec, _out(args, '{}.stft.csv'.format(_stem(args.input))), args.part)


def cmd_mel(args: argparse.Namespace, cfg: RunConfig) -> None:
    n_mels, fmin, fmax = cfg.mel_params()
    mel = mel_spectrogram(load_wav(args.input), cfg.stft_config(), n_mels, fmin, fmax)
    write_csv_grid(mel.values, _out(args, '{}.mel.csv'.format(_stem(args.input))))


def cmd_spectrogram_image(args: argparse.Namespace, cfg: RunConfig) -> None:
    spec = stft(load_wav(args.input), cfg.stft_config())
    write_pgm(spec.magnitude(), _out(args, '{}.pgm'.format(_stem(args.input))), args.db_range)


def cmd_metrics(args: argparse.Namespace, cfg: RunConfig) -> None:
    header = ('file',) + METRIC_COLUMNS
    if os.path.isdir(args.ref) and os.path.isdir(args.gen):
        named, unmatched = evaluate_directories(args.ref, args.gen, cfg.stft_config(), progress=args.progress)
        for name in unmatched:
            print('unmatched: {}'.format(name), file=sys.stderr)
    elif os.path.isdir(args.ref) or os.path.isdir(args.gen):
        raise ValueError('--ref and --gen must both be files or both be directories')
    else:
        named = [(os.path.basename(args.gen), evaluate_pair(load_wav(args.ref), load_wav(args.gen),
                                                          cfg.stft_config()))]
    rows = [[name] + list(report.as_dict().values()) for name, report in named]
    write_csv_rows(header, rows, _out(args, 'metrics.csv'))
    _print_table(header, rows)


def cmd_loss(args: argparse.Namespace, cfg: RunConfig) -> None:
    ref, gen = load_wav(args.ref), load_wav(args.gen)
    breakdown = ri_loss(ref, gen, cfg.stft_config())
    mr_total, _ = mr_ri_loss(ref, gen, MultiResConfig())
    rows = list(breakdown.as_dict().items()) + [('mr_ri', mr_total)]
    write_csv_rows(('term', 'value'), rows, _out(args, 'loss_ri.csv'))
    _print_table(('term', 'value'), rows)


def cmd_pqmf_split(args: argparse.Namespace, cfg: RunConfig) -> None:
    bank = cfg.pqmf_bank()
    x = load_wav(args.input)
    sb = pqmf_analysis(x, bank)
    band_rate = int(round(x.sample_rate / bank.num_bands))
    for k, band in enumerate(sb.bands):
        path = _out(args, '{}.band{:02d}.wav'.format(_stem(args.input), k))
        save_wav(AudioBuffer(band, band_rate), path)
        write_sidecar(path, {'band': k, 'num_bands': bank.num_bands, 'taps': bank.taps_per_filter,
                             'beta': bank.beta, 'source_len': sb.source_len, 'sample_rate': x.sample_rate})


def cmd_pqmf_merge(args: argparse.Namespace, cfg: RunConfig) -> None:
    params = read_sidecar(args.bands[0])
    bank = cfg.pqmf_bank()
    if params.get('num_bands') != bank.num_bands or len(args.bands) != bank.num_bands:
        raise ShapeMismatchError('{} band files'.format(bank.num_bands), len(args.bands))
    bands = np.stack([load_wav(path).samples for path in args.bands])
    sb = SubbandSignals(bands, int(params['source_len']), int(params['sample_rate']))
    merged = pqmf_synthesis(sb, bank)
    save_wav(merged, _out(args, '{}.merged.wav'.format(_stem(args.bands[0]).rsplit('.band', 1)[0])))


def cmd_augment(args: argparse.Namespace, cfg: RunConfig) -> None:
    x = load_wav(args.input)
    seed = cfg['seed']
    params = {'kind': args.kind, 'seed': seed, 'source': os.path.basename(args.input)}  # type: Dict[str, Any]
    if args.kind == 'noise':
        params['snr_db'] = args.snr if args.snr is not None else 'random'
        y = add_noise(x, args.snr, seed)
    elif args.kind == 'pitch':
        params['pitch_ratio'] = args.ratio
        y = harmonic_shift(x, args.ratio)
    elif args.codec_command:
        params['command'] = args.codec_command
        y = external_codec(x, args.codec_command)
    else:
        params.update(cutoff_hz=args.cutoff, bits=args.bits)
        y = lossy_compress_proxy(x, args.cutoff, args.bits)
    path = _out(args, '{}.{}.wav'.format(_stem(args.input), args.kind))
    save_wav(y, path)
    write_sidecar(path, params)


def cmd_upsample_demo(args: argparse.Namespace, cfg: RunConfig) -> None:
    rate = cfg['sample_rate']
    stride = args.stride
    if stride < 1:
        raise ValueError('--stride must be positive, got {}'.format(stride))
    if not args.duration > 0:
        raise ValueError('--duration must be positive, got {}'.format(args.duration))
    low_rate = rate / stride
    if not 0 < args.tone < low_rate / 2:
        raise ValueError('--tone must lie in (0, {}) Hz for stride {}'.format(low_rate / 2, stride))
    n_low = int(round(args.duration * low_rate))
    x = 0.5 * np.sin(2 * math.pi * args.tone * np.arange(n_low) / low_rate)
    kernel = np.full(2 * stride + 1, stride / (2 * stride + 1.0))
    spec = DeconvSpec(kernel, stride, 'ones')
    images = image_frequencies(args.tone, low_rate, stride, rate)

    rows = []
    for mode in DEMO_MODES:
        y = AudioBuffer(upsample_pipeline(x, spec, mode), rate)
        rows.append((args.tone, mode, aliasing_energy(y, args.tone, images)))
        if mode != 'twin':
            save_wav(y, _out(args, '{}.wav'.format(mode)))
            write_pgm(stft(y, cfg.stft_config()).magnitude(), _out(args, '{}.pgm'.format(mode)))
    write_csv_rows(('tone_hz', 'mode', 'aliasing_db'), rows, _out(args, 'aliasing.csv'))
    _print_table(('tone_hz', 'mode', 'aliasing_db'), rows)


def cmd_train_toy(args: argparse.Namespace, cfg: RunConfig) -> None:
    overrides = {'progress': args.progress}  # type: Dict[str, Any]
    if args.steps is not None:
        overrides['steps'] = args.steps
    if args.mode is not None:
        overrides['mode'] = args.mode
    train_cfg = cfg.train_config(**overrides)
    if args.ablate:
        report = run_ablation(train_cfg, args.ablate)
        report.to_csv(_out(args, 'ablation.csv'))
        report.baseline.to_csv(_out(args, 'history.csv'))
        report.ablated.to_csv(_out(args, 'history_ablated.csv'))
        _print_table(('metric', 'full', 'w/o ' + args.ablate), report.rows())
        return
    training, generator = train_toy(None, train_cfg, return_generator=True)
    training.to_csv(_out(args, 'history.csv'))
    training.eval_to_csv(_out(args, 'eval.csv'))
    save_checkpoint(generator.get_state(), _out(args, 'generator.fagn'))
    _print_table(('metric', 'initial', 'final'),
                 [(k, training.initial_eval[k], training.final_eval[k]) for k in EVAL_COLUMNS])


def cmd_grad_check(args: argparse.Namespace, cfg: RunConfig) -> None:
    results = run_grad_suite(seeds=range(cfg['seed'], cfg['seed'] + args.seeds))
    rows = [(r.name, r.max_error) for r in results]
    write_csv_rows(('kind', 'max_error'), rows, _out(args, 'grad_check.csv'))
    _print_table(('kind', 'max_error'), rows)
    failed = [r.name for r in results if not r.max_error <= GRAD_TOLERANCE]
    if failed:
        raise NumericalError('gradient check above {} for {}'.format(GRAD_TOLERANCE, ', '.join(failed)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='fagan', description='Vocoder signal tools and toy GAN harness')
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    parser.add_argument('--config', help='RunConfig file (default: $FAGAN_CONFIG)')
    parser.add_argument('--out-dir', default='.', help='Directory for all outputs')
    parser.add_argument('--seed', type=int, help='Overrides the configured seed')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v for info, -vv for debug')
    parser.add_argument('--quiet', action='store_true', help='No progress bars')
    sub = parser.add_subparsers(dest='subcommand', metavar='command')
    sub.required = True

    def add(name: str, func: Callable, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    p = add('stft', cmd_stft, 'STFT of a WAV file as CSV')
    p.add_argument('--input', required=True)
    p.add_argument('--part', choices=('magnitude', 'real', 'imag'), default='magnitude')

    p = add('mel', cmd_mel, 'log-mel spectrogram of a WAV file as CSV')
    p.add_argument('--input', required=True)

    p = add('spectrogram-image', cmd_spectrogram_image, 'log-magnitude spectrogram as PGM image')
    p.add_argument('--input', required=True)
    p.add_argument('--db-range', type=float, default=80.0)

    p = add('metrics', cmd_metrics, 'objective metrics of --gen against --ref (files or directories)')
    p.add_argument('--ref', required=True)
    p.add_argument('--gen', required=True)

    p = add('loss', cmd_loss, 'loss values between two WAV files')
    p.add_argument('kind', choices=('ri',))
    p.add_argument('--ref', required=True)
    p.add_argument('--gen', required=True)

    p = add('pqmf', cmd_pqmf_split, 'PQMF band split and merge')
    pqmf_sub = p.add_subparsers(dest='action', metavar='action')
    pqmf_sub.required = True
    split = pqmf_sub.add_parser('split', help='write one WAV per band')
    split.set_defaults(func=cmd_pqmf_split)
    split.add_argument('--input', required=True)
    merge = pqmf_sub.add_parser('merge', help='reconstruct from band WAVs written by split')
    merge.set_defaults(func=cmd_pqmf_merge)
    merge.add_argument('--bands', nargs='+', required=True)

    p = add('augment', cmd_augment, 'noise, pitch or codec augmentation')
    p.add_argument('kind', choices=('noise', 'pitch', 'codec'))
    p.add_argument('--input', required=True)
    p.add_argument('--snr', type=float, help='SNR in dB (default: uniform 28..40)')
    p.add_argument('--ratio', type=float, default=1.0, help='pitch ratio')
    p.add_argument('--cutoff', type=float, default=CODEC_CUTOFF)
    p.add_argument('--bits', type=int, default=CODEC_BITS)
    p.add_argument('--command', dest='codec_command', help='external codec command with {input} and {output}')

    p = add('upsample-demo', cmd_upsample_demo, 'plain vs twin upsampling of a test tone')
    p.add_argument('--tone', type=float, default=1000.0)
    p.add_argument('--stride', type=int, default=4)
    p.add_argument('--duration', type=float, default=1.0)

    p = add('train-toy', cmd_train_toy, 'train the toy generator')
    p.add_argument('--ablate', choices=ABLATIONS)
    p.add_argument('--steps', type=int)
    p.add_argument('--mode', choices=('regression', 'adversarial'))

    p = add('grad-check', cmd_grad_check, 'finite-difference check of every gradient')
    p.add_argument('--seeds', type=int, default=1)
    return parser


_EXIT_CODES = (
    (ConfigError, ExitCode.USAGE),
    (NumericalError, ExitCode.NUMERICAL),
    ((AudioFormatError, SignalTooShortError, ShapeMismatchError, CheckpointError, CodecError, OSError),
     ExitCode.INPUT_FORMAT),
    # argument contracts of the library functions
    (ValueError, ExitCode.USAGE),
)


def exit_code_for(ex: BaseException) -> Optional[ExitCode]:
    for types, code in _EXIT_CODES:
        if isinstance(ex, types):  # type: ignore
            return code
    return None


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    args.progress = not args.quiet and sys.stderr.isatty()

    try:
        cfg = load_run_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        os.makedirs(args.out_dir, exist_ok=True)
        cfg.save(_out(args, 'config.txt'))
        args.func(args, cfg)
    except Exception as ex:
        code = exit_code_for(ex)
        if code is None:
            raise
        logger.debug('command failed', exc_info=True)
        print('fagan: error: {}'.format(ex), file=sys.stderr)
        return code.value
    return ExitCode.SUCCESS.value
