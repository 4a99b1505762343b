"""Randomized patch-antenna fingerprints.

Each antenna element is an aperture-coupled rectangular patch whose corner
geometry is randomized (center shift up to R mm, per-corner perturbation up
to C mm) and which carries a per-element phase-error field alpha(theta, phi)
evaluated at the transmit direction. Three field flavors:

  geometry    - uniform constant term plus a truncated 2-D harmonic expansion,
                so the error depends on the radiation direction
  feedline    - uniform constant term only (randomized feed-line length shows
                up as a direction-independent phase offset)
  traditional - small wrapped-Gaussian constant, emulating the tiny natural
                fingerprints of stock RF hardware

All randomness is drawn from streams derived from (master_seed, antenna_id),
so regenerating any object reproduces it exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .rng import stream

SPEED_OF_LIGHT = 2.9979e8  # m/s
ARRAY_FREQ_HZ = 5.8e9
HALF_WAVELENGTH_MM = SPEED_OF_LIGHT / (2.0 * ARRAY_FREQ_HZ) * 1e3  # ~25.844 mm
ELEVATION_MAX = math.radians(75.0)
# maps the allowed elevation range onto one full harmonic period
THETA_PERIOD_SCALE = 2.0 * math.pi / ELEVATION_MAX

ELEMENTS_PER_DEVICE = 4

# Harmonic expansion defaults. The amplitude cap for order (p, q) is
# AMPLITUDE_SCALE / (p + |q|), azimuth-dependent orders (q != 0) further
# damped by PHI_ORDER_DAMPING, and each amplitude drawn uniformly from
# [AMPLITUDE_FLOOR, 1] times its cap. Tuned so every field varies clearly
# with direction (wrapped grid spread > 0.5 rad) while device phase
# signatures stay separable under the channel's burst-to-burst drift.
THETA_ORDERS = 3
PHI_ORDERS = 3
AMPLITUDE_SCALE = 0.3  # rad
PHI_ORDER_DAMPING = 0.15
AMPLITUDE_FLOOR = 0.5

# Traditional (non-randomized) hardware: the natural phase offset sits mostly
# in the transmit chain shared by the array, with a small per-element residual
# from the switch paths. Marginal per-antenna std is TRADITIONAL_SIGMA; the
# element-residual share is TRADITIONAL_ELEMENT_SHARE of that std.
TRADITIONAL_SIGMA = math.radians(5.0)
TRADITIONAL_ELEMENT_SHARE = 0.3

TWO_PI = 2.0 * math.pi


class PhaseMode(str, Enum):
    """Which randomization mechanism produced the phase-error field."""

    GEOMETRY = "geometry"
    FEEDLINE = "feedline"
    TRADITIONAL = "traditional"


@dataclass(frozen=True)
class RandomizationParams:
    """Limits of the patch randomization and the corpus master seed."""

    max_center_shift_mm: float = 4.0
    max_corner_shift_mm: float = 0.5
    nominal_width_mm: float = 14.4
    nominal_height_mm: float = 12.0
    master_seed: int = 0

    def __post_init__(self):
        if self.max_center_shift_mm < 0 or self.max_corner_shift_mm < 0:
            raise ValueError("randomization limits must be non-negative")
        if self.nominal_width_mm <= 0 or self.nominal_height_mm <= 0:
            raise ValueError("nominal patch dimensions must be positive")
        if not 0 <= int(self.master_seed) < (1 << 64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class PatchGeometry:
    """Randomized patch corners plus the draws that produced them.

    ``corners`` are the perturbed corner points in mm. ``center_shift`` is
    (r, psi): the whole rectangle moved by r in direction psi.
    ``corner_shifts`` holds one (c_i, tau_i) pair per corner. Rebuilding the
    corners from the nominal rectangle and these draws reproduces ``corners``
    exactly.
    """

    corners: tuple[tuple[float, float], ...]
    center_shift: tuple[float, float]
    corner_shifts: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.corners) != 4 or len(self.corner_shifts) != 4:
            raise ValueError("patch geometry requires exactly 4 corners")


@dataclass(frozen=True)
class Harmonic:
    """One cos(p*scaled_theta + q*phi + phase) term of a phase field."""

    theta_order: int
    phi_order: int
    amplitude: float
    phase: float


@dataclass(frozen=True)
class PhaseField:
    """Direction-dependent phase error of one antenna element."""

    mode: PhaseMode
    base_phase: float  # rad, constant term in [0, 2*pi)
    harmonics: tuple[Harmonic, ...]
    theta_order_max: int = 0
    phi_order_max: int = 0

    def __post_init__(self):
        if not 0.0 <= self.base_phase < TWO_PI:
            raise ValueError("base_phase must lie in [0, 2*pi)")
        if self.mode is not PhaseMode.GEOMETRY:
            if self.harmonics:
                raise ValueError(f"{self.mode.value} fields carry no harmonics")
        elif not any(h.amplitude > 0 for h in self.harmonics):
            raise ValueError("geometry fields need at least one nonzero harmonic")


@dataclass(frozen=True)
class Direction:
    """Transmit direction: elevation theta in [0, 75 deg], azimuth phi in [-pi, pi]."""

    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= ELEVATION_MAX:
            raise ValueError(f"theta {self.theta!r} outside [0, {ELEVATION_MAX:.4f}] rad")
        if not -math.pi <= self.phi <= math.pi:
            raise ValueError(f"phi {self.phi!r} outside [-pi, pi]")


@dataclass(frozen=True)
class AntennaFingerprint:
    """One element: randomized geometry plus its phase-error field."""

    antenna_id: int
    geometry: PatchGeometry
    phase_field: PhaseField


@dataclass(frozen=True)
class CaaDevice:
    """A 1x4 chaotic antenna array with half-wavelength element pitch."""

    device_id: int
    elements: tuple[AntennaFingerprint, ...]
    element_positions: tuple[tuple[float, float], ...]  # mm

    def __post_init__(self):
        if len(self.elements) != ELEMENTS_PER_DEVICE:
            raise ValueError("a device carries exactly 4 elements")
        ids = [e.antenna_id for e in self.elements]
        if len(set(ids)) != ELEMENTS_PER_DEVICE:
            raise ValueError("antenna ids within a device must be distinct")


def nominal_corners(params: RandomizationParams) -> tuple[tuple[float, float], ...]:
    """Corners of the unperturbed rectangle, centered at the origin (mm)."""
    hw = params.nominal_width_mm / 2.0
    hh = params.nominal_height_mm / 2.0
    return ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh))


def randomize_patch(params: RandomizationParams, antenna_id: int) -> PatchGeometry:
    """Draw a randomized patch for one antenna.

    The whole rectangle shifts by r ~ U[0, R] in direction psi ~ U[0, 2pi],
    then each corner moves by c_i ~ U[0, C] in direction tau_i ~ U[0, 2pi].
    Draw order is fixed (r, psi, c[0..3], tau[0..3]) so results only depend
    on (master_seed, antenna_id).
    """
    rng = stream(params.master_seed, "patch", antenna_id)
    r = rng.uniform(0.0, params.max_center_shift_mm)
    psi = rng.uniform(0.0, TWO_PI)
    c = rng.uniform(0.0, params.max_corner_shift_mm, ELEMENTS_PER_DEVICE)
    tau = rng.uniform(0.0, TWO_PI, ELEMENTS_PER_DEVICE)

    corners = []
    for (x, y), ci, ti in zip(nominal_corners(params), c, tau):
        corners.append((x + r * math.cos(psi) + ci * math.cos(ti),
                        y + r * math.sin(psi) + ci * math.sin(ti)))
    return PatchGeometry(
        corners=tuple(corners),
        center_shift=(float(r), float(psi)),
        corner_shifts=tuple((float(ci), float(ti)) for ci, ti in zip(c, tau)),
    )


def reconstruct_corners(geometry: PatchGeometry,
                        params: RandomizationParams) -> tuple[tuple[float, float], ...]:
    """Rebuild the corner points from the stored draws (invariant check)."""
    r, psi = geometry.center_shift
    out = []
    for (x, y), (ci, ti) in zip(nominal_corners(params), geometry.corner_shifts):
        out.append((x + r * math.cos(psi) + ci * math.cos(ti),
                    y + r * math.sin(psi) + ci * math.sin(ti)))
    return tuple(out)


def synthesize_phase_field(params: RandomizationParams,
                           antenna_id: int,
                           mode: PhaseMode,
                           *,
                           theta_orders: int = THETA_ORDERS,
                           phi_orders: int = PHI_ORDERS,
                           amplitude_scale: float = AMPLITUDE_SCALE,
                           phi_damping: float = PHI_ORDER_DAMPING,
                           amplitude_floor: float = AMPLITUDE_FLOOR,
                           traditional_sigma: float = TRADITIONAL_SIGMA) -> PhaseField:
    """Draw the phase-error field for one antenna in the requested mode.

    geometry mode draws the constant term uniformly on [0, 2pi) plus
    theta_orders * (2*phi_orders + 1) harmonics; the 1/(p+|q|) cap decay
    keeps the field smooth, and the amplitude floor keeps every antenna
    visibly direction-dependent. feedline mode keeps only the uniform
    constant. traditional mode wraps a Gaussian(0, traditional_sigma)
    constant.
    """
    rng = stream(params.master_seed, "phase", mode.value, antenna_id)
    if mode is PhaseMode.FEEDLINE:
        return PhaseField(mode, float(rng.uniform(0.0, TWO_PI)), ())
    if mode is PhaseMode.TRADITIONAL:
        # chain-common part is drawn per device (= antenna_id // 4), the
        # residual per element; marginal std stays traditional_sigma
        share = TRADITIONAL_ELEMENT_SHARE
        common_rng = stream(params.master_seed, "phase", mode.value, "chain",
                            antenna_id // ELEMENTS_PER_DEVICE)
        common = common_rng.normal(0.0, traditional_sigma * math.sqrt(1.0 - share ** 2))
        residual = rng.normal(0.0, traditional_sigma * share)
        return PhaseField(mode, float((common + residual) % TWO_PI), ())

    beta = float(rng.uniform(0.0, TWO_PI))
    orders = [(p, q) for p in range(1, theta_orders + 1)
              for q in range(-phi_orders, phi_orders + 1)]
    caps = np.array([amplitude_scale / (p + abs(q)) * (phi_damping if q else 1.0)
                     for p, q in orders])
    amplitudes = rng.uniform(amplitude_floor, 1.0, len(orders)) * caps
    phases = rng.uniform(0.0, TWO_PI, len(orders))
    harmonics = tuple(
        Harmonic(p, q, float(a), float(ph))
        for (p, q), a, ph in zip(orders, amplitudes, phases)
    )
    return PhaseField(mode, beta, harmonics,
                      theta_order_max=theta_orders, phi_order_max=phi_orders)


def eval_phase(field: PhaseField, direction: Direction) -> float:
    """Phase error of ``field`` toward ``direction``, wrapped to [0, 2*pi)."""
    total = field.base_phase
    scaled_theta = direction.theta * THETA_PERIOD_SCALE
    for h in field.harmonics:
        total += h.amplitude * math.cos(h.theta_order * scaled_theta
                                        + h.phi_order * direction.phi + h.phase)
    return total % TWO_PI


def eval_phase_grid(field: PhaseField, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Vectorized ``eval_phase`` over broadcastable theta/phi arrays (rad)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if theta.size and (theta.min() < 0.0 or theta.max() > ELEVATION_MAX):
        raise ValueError("theta values outside [0, 75 deg]")
    if phi.size and (np.abs(phi).max() > math.pi):
        raise ValueError("phi values outside [-pi, pi]")
    total = np.full(np.broadcast_shapes(theta.shape, phi.shape), field.base_phase)
    scaled_theta = theta * THETA_PERIOD_SCALE
    for h in field.harmonics:
        total = total + h.amplitude * np.cos(h.theta_order * scaled_theta
                                             + h.phi_order * phi + h.phase)
    return np.mod(total, TWO_PI)


def build_fingerprint(params: RandomizationParams, antenna_id: int,
                      mode: PhaseMode) -> AntennaFingerprint:
    return AntennaFingerprint(
        antenna_id=antenna_id,
        geometry=randomize_patch(params, antenna_id),
        phase_field=synthesize_phase_field(params, antenna_id, mode),
    )


def build_device(params: RandomizationParams, device_id: int, mode: PhaseMode) -> CaaDevice:
    """Assemble device ``device_id``: 4 fingerprints on a half-wavelength line.

    Element antenna ids are device_id*4 + {0,1,2,3}; positions are centered on
    the origin with ~25.84 mm pitch (lambda/2 at 5.8 GHz).
    """
    elements = tuple(
        build_fingerprint(params, device_id * ELEMENTS_PER_DEVICE + k, mode)
        for k in range(ELEMENTS_PER_DEVICE)
    )
    positions = tuple(
        ((k - (ELEMENTS_PER_DEVICE - 1) / 2.0) * HALF_WAVELENGTH_MM, 0.0)
        for k in range(ELEMENTS_PER_DEVICE)
    )
    return CaaDevice(device_id=device_id, elements=elements, element_positions=positions)
