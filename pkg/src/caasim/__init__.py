"""caasim: chaotic antenna array RF-fingerprint authentication simulator.

Generates randomized patch-antenna fingerprints, simulates pilot
authentication sessions through time-correlated Rayleigh fading, serializes
I/Q corpora to a checksummed binary format, and trains/evaluates a
from-scratch convolutional baseline that recognizes devices by their
fingerprints.
"""

from .channel import ChannelParams, FadingTrace, add_noise, coherence_time, doppler_shift, generate_fading
from .classifier import (Cnn3Model, Metrics, ModelSpec, TrainConfig, evaluate,
                         gradient_check, load_model, save_model, train)
from .dataset import (CorpusConfig, CorpusCorruptionError, CorpusFormatError,
                      CorpusTruncatedError, DatasetManifest, generate_corpus,
                      read_corpus, split_arrays, write_corpus)
from .fingerprint import (AntennaFingerprint, CaaDevice, Direction, PatchGeometry,
                          PhaseField, PhaseMode, RandomizationParams, build_device,
                          eval_phase, eval_phase_grid, randomize_patch,
                          synthesize_phase_field)
from .session import SessionRecord, generate_session, sample_direction

__version__ = "0.1.0"

__all__ = [
    "AntennaFingerprint", "CaaDevice", "ChannelParams", "Cnn3Model", "CorpusConfig",
    "CorpusCorruptionError", "CorpusFormatError", "CorpusTruncatedError",
    "DatasetManifest", "Direction", "FadingTrace", "Metrics", "ModelSpec",
    "PatchGeometry", "PhaseField", "PhaseMode", "RandomizationParams", "SessionRecord",
    "TrainConfig", "add_noise", "build_device", "coherence_time", "doppler_shift",
    "evaluate", "eval_phase", "eval_phase_grid", "generate_corpus", "generate_fading",
    "generate_session", "gradient_check", "load_model", "randomize_patch",
    "read_corpus", "sample_direction", "save_model", "split_arrays",
    "synthesize_phase_field", "train", "write_corpus",
]
