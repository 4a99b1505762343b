"""One authentication session: 4 elements share the pilot sequence through
a common fading process.

The switch network (see the device's circuit) cycles through the array
elements in blocks of SWITCH_BLOCK samples, each element sending a
unit-amplitude pilot rotated by its phase error toward the session
direction. One fading process spans the whole 4n-sample sequence; row r of
element k's I/Q columns corresponds to that element's sample in switching
round r // SWITCH_BLOCK. Because a full round lasts well under the channel
coherence time, the channel stays correlated across the elements' samples
at the same row, which is what lets a receiver compare element phases;
successive rounds accumulate channel drift that blurs small fingerprints.
Receiver noise is i.i.d. per sample and column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, generate_fading, noise_variance
from .fingerprint import (ELEMENTS_PER_DEVICE, ELEVATION_MAX, CaaDevice,
                          Direction, eval_phase)
from .rng import derive_seed, stream

NUM_COLUMNS = 2 * ELEMENTS_PER_DEVICE  # I/Q pair per element
SWITCH_BLOCK = 250  # samples one element transmits before the switch advances


@dataclass(frozen=True)
class SessionRecord:
    """Received I/Q matrix of one session, columns [I1 Q1 I2 Q2 I3 Q3 I4 Q4]."""

    device_id: int
    direction: Direction
    samples: np.ndarray  # (n, 8) float32
    session_index: int = 0

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[1] != NUM_COLUMNS:
            raise ValueError(f"samples must be (n, {NUM_COLUMNS})")
        if not np.isfinite(self.samples).all():
            raise ValueError("samples contain non-finite values")


def sample_direction(stream_seed: int) -> Direction:
    """Uniform random direction: theta in [0, 75 deg], phi in [-180, 180 deg]."""
    rng = stream(stream_seed, "direction")
    theta = rng.uniform(0.0, ELEVATION_MAX)
    phi = rng.uniform(-math.pi, math.pi)
    return Direction(theta=float(theta), phi=float(phi))


def switch_schedule(n: int, block: int = SWITCH_BLOCK) -> np.ndarray:
    """Global trace index of row r, element k under block switching.

    Returns an (n, 4) int array into a 4n-sample trace. Round j covers rows
    [j*block, (j+1)*block); within it element k transmits its samples
    consecutively, elements in id order. A final short round shrinks its
    per-element sub-burst accordingly.
    """
    block = min(block, n)
    r = np.arange(n)
    rnd = r // block
    within = r % block
    size = np.minimum(block, n - rnd * block)  # per-element sub-burst this round
    start = 4 * block * rnd
    return (start[:, None]
            + np.arange(ELEMENTS_PER_DEVICE)[None, :] * size[:, None]
            + within[:, None])


def generate_session(device: CaaDevice, direction: Direction, channel: ChannelParams,
                     n: int, stream_seed: int, *, identity_channel: bool = False,
                     session_index: int = 0, switch_block: int = SWITCH_BLOCK) -> SessionRecord:
    """Simulate one session of ``n`` samples per element.

    Element k sends pilot x = exp(j*alpha_k) with alpha_k its phase error
    toward ``direction``; sample r of column pair k is y = h[t(r, k)]*x + w
    with t the block-switching schedule over one session-wide fading trace.
    ``identity_channel`` pins h = 1 (debug). Noise comes from a stream
    separate from the fading stream, so a noiseless rerun (snr_db = inf)
    reproduces identical channel coefficients.
    """
    if n <= 0:
        raise ValueError("samples per element must be positive")
    alphas = [eval_phase(e.phase_field, direction) for e in device.elements]

    if identity_channel:
        trace = np.ones(ELEMENTS_PER_DEVICE * n, dtype=complex)
    else:
        trace = generate_fading(channel, ELEMENTS_PER_DEVICE * n,
                                derive_seed(stream_seed, "fade")).samples

    sigma_sq = noise_variance(channel.snr_db, channel.channel_power)
    if sigma_sq > 0.0:
        rng = stream(stream_seed, "noise")
        scale = math.sqrt(sigma_sq / 2.0)
        noise = (rng.normal(0.0, scale, (n, ELEMENTS_PER_DEVICE))
                 + 1j * rng.normal(0.0, scale, (n, ELEMENTS_PER_DEVICE)))
    else:
        noise = np.zeros((n, ELEMENTS_PER_DEVICE), dtype=complex)

    schedule = switch_schedule(n, switch_block)
    samples = np.empty((n, NUM_COLUMNS), dtype=np.float32)
    for k in range(ELEMENTS_PER_DEVICE):
        y = trace[schedule[:, k]] * np.exp(1j * alphas[k]) + noise[:, k]
        samples[:, 2 * k] = y.real.astype(np.float32)
        samples[:, 2 * k + 1] = y.imag.astype(np.float32)
    return SessionRecord(device_id=device.device_id, direction=direction,
                         samples=samples, session_index=session_index)
