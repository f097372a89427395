"""Noise-aware TTS corpus toolkit: augmentation, WADA-SNR, features, metrics, training kernels."""

from noisekit.audio_io import AudioBuffer, load_wav, save_wav
from noisekit.spectral import FrameGeometry, FeatureSequence, bark_cepstra, mel_features, stft_power
from noisekit.pitch import PitchConfig, PitchTrack, track_pitch
from noisekit.wada import GainTable, SnrEstimate, build_gain_table, estimate_snr
from noisekit.augment import AugmentationSpec, AugmentationRecord, mix_at_snr, sample_augmentation
from noisekit.metrics import MetricReport, mcd, pitch_metrics, evaluate_pair
from noisekit.train_math import (
    CtcProblem,
    GaussianPosterior,
    PoolingSchedule,
    ResidualLatentSequence,
    apply_pooling,
    ctc_loss,
    kl_to_standard_normal,
    learning_rate,
    pooling_probability,
)

__version__ = "0.1.0"
