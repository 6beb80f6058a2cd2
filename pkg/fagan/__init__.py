"""python-fagan provides vocoder signal tools, losses, metrics and a toy GAN harness"""
from .audio import AudioBuffer, load_wav, save_wav
from .spectral import StftConfig, stft, istft, mel_spectrogram
from .subband import design_pqmf, pqmf_analysis, pqmf_synthesis
from .upsample import DeconvSpec, transposed_conv1d, twin_deconv, upsample_pipeline
from .losses import MultiResConfig, LossWeights, ri_loss, mr_ri_loss, mel_loss
from .metrics import mcd, lsd, lsd_bands, f0_rmse, evaluate_pair
from .models import ToyGenerator, DiscriminatorBank
from .gradcheck import grad_check, run_grad_suite
from .training import TrainConfig, train_toy, run_ablation
from .config import RunConfig, load_run_config
from .const import __version__
