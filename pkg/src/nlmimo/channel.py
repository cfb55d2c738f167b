"""Array geometry, channels, and amplifier-deviation randomization.

Free-space line-of-sight channels of a uniform linear array are pure phase
ramps over the antenna index; the array gain collects how any phase ramp
combines under conjugate weighting.  The frequency-selective model places
scattering clusters in the plane and builds per-antenna tap delay lines from
their geometry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

__all__ = [
    "UlaLosScenario",
    "MultipathScenario",
    "DeviationModel",
    "los_channel",
    "composite_channel",
    "array_gain",
    "array_gain_envelope",
    "draw_deviated_gains",
    "expected_deviation_gain",
    "draw_cluster_geometry",
    "draw_multipath_channel",
    "steering_vector",
    "mrc_weights",
    "scenario_from_json",
]


@dataclass(frozen=True)
class UlaLosScenario:
    """Far-field line-of-sight transmitters seen by a uniform linear array.

    Angles are normalized sine angles (the per-antenna phase increment in
    radians).  The blocker occupies the last transmitter slot; a zero
    blocker power means it is absent but the slot is kept so transmitter
    indexing is uniform.
    """

    antennas: int
    user_powers: tuple[float, ...]
    user_angles: tuple[float, ...]
    blocker_power: float = 0.0
    blocker_angle: float = 0.0
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if self.antennas < 1:
            raise ValueError("need at least one antenna")
        if len(self.user_powers) != len(self.user_angles):
            raise ValueError("user_powers and user_angles must have equal length")
        if any(p < 0 for p in self.user_powers) or self.blocker_power < 0:
            raise ValueError("powers must be non-negative")
        object.__setattr__(self, "user_powers", tuple(float(p) for p in self.user_powers))
        object.__setattr__(self, "user_angles", tuple(float(a) for a in self.user_angles))

    @property
    def n_users(self) -> int:
        return len(self.user_powers)

    @property
    def all_powers(self) -> np.ndarray:
        """Received powers of all transmitters, blocker last."""
        return np.array(list(self.user_powers) + [self.blocker_power])

    @property
    def all_angles(self) -> np.ndarray:
        return np.array(list(self.user_angles) + [self.blocker_angle])

    @staticmethod
    def sine_angle(incidence_deg: float, spacing_wavelengths: float = 0.5) -> float:
        """Normalized sine angle ``-2 pi sin(theta) spacing / lambda``."""
        return -2.0 * np.pi * np.sin(np.deg2rad(incidence_deg)) * spacing_wavelengths


def los_channel(scenario: UlaLosScenario) -> np.ndarray:
    """Unit-modulus channel matrix ``h[k, m] = exp(j m phi_k)``, ``m = 1..M``.

    Rows cover the users and then the blocker.  Antenna indexing starts at 1;
    the resulting global phase is irrelevant to any gain.
    """
    m = np.arange(1, scenario.antennas + 1)
    return np.exp(1j * np.outer(scenario.all_angles, m))


def composite_channel(h: np.ndarray, k: int, kp: int, kpp: int) -> np.ndarray:
    """Third-degree mixing channel ``h_k h_k' conj(h_k'')`` per antenna.

    Transmitter indices count from 1, with the blocker at index
    ``n_users + 1`` (the last row of ``h``).
    """
    n = h.shape[0]
    for idx in (k, kp, kpp):
        if not 1 <= idx <= n:
            raise IndexError(f"transmitter index {idx} outside 1..{n}")
    return h[k - 1] * h[kp - 1] * np.conj(h[kpp - 1])


def array_gain(phi, antennas: int):
    """Coherent-combining gain ``|sum_m exp(j m phi)|^2`` in closed form.

    Evaluates the squared Dirichlet kernel ``sin^2(M phi / 2) / sin^2(phi / 2)``
    with the removable singularity at ``phi = 0 (mod 2 pi)`` set to ``M^2``.
    """
    if antennas < 1:
        raise ValueError("need at least one antenna")
    phi_arr = np.asarray(phi, dtype=float)
    half = phi_arr / 2.0
    s = np.sin(half)
    singular = np.isclose(np.abs(s), 0.0, atol=1e-12)
    safe = np.where(singular, 1.0, s)
    out = np.where(singular, float(antennas) ** 2, np.sin(antennas * half) ** 2 / safe**2)
    return float(out) if np.ndim(phi) == 0 else out


def array_gain_envelope(phi):
    """Upper envelope ``2 / (1 - cos phi)`` of the array gain, any ``M``."""
    phi_arr = np.asarray(phi, dtype=float)
    denom = 1.0 - np.cos(phi_arr)
    if np.any(np.isclose(denom, 0.0, atol=1e-12)):
        raise ValueError("envelope diverges at phi = 0 (mod 2 pi)")
    out = 2.0 / denom
    return float(out) if np.ndim(phi) == 0 else out


@dataclass(frozen=True)
class DeviationModel:
    """Random spread of the per-antenna third-degree gains across the array.

    The products of third-degree and conjugated linear coefficients deviate
    independently around a common mean: ``sqrt(1 - eta) a3 + alpha_m`` with
    ``alpha_m ~ CN(0, eta |a3|^2)``.  ``eta = 0`` gives identical amplifiers,
    ``eta = 1`` fully independent ones.
    """

    eta: float
    base_a3: complex
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")


def draw_deviated_gains(model: DeviationModel, antennas: int, draw_index: int = 0) -> np.ndarray:
    """One realization of the per-antenna gain products; fixed seed, fixed draw."""
    rng = np.random.default_rng([model.seed, draw_index])
    scale = np.sqrt(model.eta / 2.0) * abs(model.base_a3)
    noise = scale * (rng.standard_normal(antennas) + 1j * rng.standard_normal(antennas))
    return np.sqrt(1.0 - model.eta) * model.base_a3 + noise


def expected_deviation_gain(eta: float, phi: float, antennas: int) -> float:
    """Mean distortion array gain in units of ``|a3|^2``.

    ``g(phi) (1 - eta) + M eta``: deviation drains the coherent peak and
    raises the isotropic floor.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    return array_gain(phi, antennas) * (1.0 - eta) + antennas * eta


@dataclass(frozen=True)
class MultipathScenario:
    """Scattering-cluster geometry for the frequency-selective channel.

    Every transmitter is received over ``n_clusters`` paths with fixed path
    gains, delays, and planar positions (in wavelengths); only the per-path
    phases are redrawn between coherence intervals.  Delays are stored in
    symbol periods.
    """

    antennas: int
    user_powers: tuple[float, ...]
    blocker_power: float
    path_gains: np.ndarray = field(repr=False)  # (n_tx, V) non-negative
    delays_symbols: np.ndarray = field(repr=False)  # (n_tx, V)
    positions_wavelengths: np.ndarray = field(repr=False)  # (n_tx, V, 2)
    spacing_wavelengths: float = 0.5
    phase_seed: int = 0

    def __post_init__(self):
        gains = np.asarray(self.path_gains, dtype=float)
        delays = np.asarray(self.delays_symbols, dtype=float)
        pos = np.asarray(self.positions_wavelengths, dtype=float)
        n_tx = len(self.user_powers) + 1
        if gains.shape != delays.shape or gains.shape[0] != n_tx:
            raise ValueError("path_gains and delays_symbols must be (n_tx, V)")
        if pos.shape != gains.shape + (2,):
            raise ValueError("positions_wavelengths must be (n_tx, V, 2)")
        if np.any(gains < 0) or np.any(delays < 0):
            raise ValueError("path gains and delays must be non-negative")
        object.__setattr__(self, "path_gains", gains)
        object.__setattr__(self, "delays_symbols", delays)
        object.__setattr__(self, "positions_wavelengths", pos)

    @property
    def n_users(self) -> int:
        return len(self.user_powers)

    @property
    def n_clusters(self) -> int:
        return self.path_gains.shape[1]

    @property
    def all_powers(self) -> np.ndarray:
        return np.array(list(self.user_powers) + [self.blocker_power])


def draw_cluster_geometry(
    n_users: int,
    antennas: int,
    n_clusters: int = 10,
    delay_spread_symbols: float = 98.36,
    seed: int = 0,
    user_powers: tuple[float, ...] | None = None,
    blocker_power: float = 0.0,
    x_range_wavelengths: tuple[float, float] = (100.0, 5000.0),
    y_range_wavelengths: tuple[float, float] = (-5000.0, 5000.0),
) -> MultipathScenario:
    """Draw one fixed environment realization of the cluster channel.

    Delays are uniform over the delay spread, path gains Rayleigh with mean
    square ``1/V`` (unit mean total path energy), and cluster positions
    uniform over the stated box.  The default delay spread corresponds to a
    3 us spread at a 40 MHz signal bandwidth.
    """
    rng = np.random.default_rng([seed, 0xC1])
    n_tx = n_users + 1
    delays = rng.uniform(0.0, delay_spread_symbols, size=(n_tx, n_clusters))
    # Rayleigh with E[gain^2] = 1/V -> scale parameter sqrt(1/(2V))
    gains = rng.rayleigh(scale=np.sqrt(1.0 / (2.0 * n_clusters)), size=(n_tx, n_clusters))
    xs = rng.uniform(*x_range_wavelengths, size=(n_tx, n_clusters))
    ys = rng.uniform(*y_range_wavelengths, size=(n_tx, n_clusters))
    if user_powers is None:
        user_powers = tuple(1.0 for _ in range(n_users))
    return MultipathScenario(
        antennas=antennas,
        user_powers=tuple(user_powers),
        blocker_power=blocker_power,
        path_gains=gains,
        delays_symbols=delays,
        positions_wavelengths=np.stack([xs, ys], axis=-1),
        phase_seed=seed,
    )


def steering_vector(x_wl: float, y_wl: float, antennas: int, spacing_wavelengths: float = 0.5) -> np.ndarray:
    """Per-antenna phase of a source at planar position ``(x, y)`` in wavelengths.

    The array lies on the y axis with element ``m`` at ``(0, (m-1) spacing)``.
    Element ``m`` gets ``exp(-j 2 pi (d_1 - d_m))`` with distances measured in
    wavelengths, i.e. one full turn per wavelength of path-length difference.
    """
    m = np.arange(antennas)
    d_ref = np.hypot(x_wl, y_wl)
    d_m = np.hypot(x_wl, y_wl - m * spacing_wavelengths)
    return np.exp(-2j * np.pi * (d_ref - d_m))


@dataclass(frozen=True)
class MultipathChannelDraw:
    """One coherence-interval realization of the cluster channel.

    ``tap_gains[k, v, m]`` is the complex gain of path ``v`` of transmitter
    ``k`` at antenna ``m``; ``tap_delays[k, v]`` the matching delay rounded
    to the ``T/Q`` grid (in samples).
    """

    tap_gains: np.ndarray = field(repr=False)
    tap_delays: np.ndarray = field(repr=False)

    def impulse_response(self, k: int, oversampling: int) -> np.ndarray:
        """Dense per-antenna impulse response of transmitter ``k`` (0-based)."""
        n_m = self.tap_gains.shape[2]
        length = int(self.tap_delays.max()) + 1
        h = np.zeros((n_m, length), dtype=complex)
        for v in range(self.tap_gains.shape[1]):
            h[:, self.tap_delays[k, v]] += self.tap_gains[k, v]
        return h


def draw_multipath_channel(
    scenario: MultipathScenario, oversampling: int, draw_index: int = 0
) -> MultipathChannelDraw:
    """Realize per-antenna tap gains with fresh uniform path phases.

    The fixed geometry supplies gains, delays, and steering phases; each
    coherence interval only redraws ``eps ~ uniform[0, 2 pi)`` per path,
    entering through ``exp(-j 2 pi (tau + eps))``.  Identical
    ``(phase_seed, draw_index)`` pairs reproduce identical channels.
    """
    rng = np.random.default_rng([scenario.phase_seed, 0xE5, draw_index])
    n_tx, V = scenario.path_gains.shape
    eps = rng.uniform(0.0, 2.0 * np.pi, size=(n_tx, V))
    phases = np.exp(-2j * np.pi * (scenario.delays_symbols + eps))
    gains = np.empty((n_tx, V, scenario.antennas), dtype=complex)
    for k in range(n_tx):
        for v in range(V):
            s = steering_vector(
                scenario.positions_wavelengths[k, v, 0],
                scenario.positions_wavelengths[k, v, 1],
                scenario.antennas,
                scenario.spacing_wavelengths,
            )
            gains[k, v] = scenario.path_gains[k, v] * phases[k, v] * s
    delays = np.rint(scenario.delays_symbols * oversampling).astype(int)
    return MultipathChannelDraw(tap_gains=gains, tap_delays=delays)


def mrc_weights(h_row: np.ndarray, a1: np.ndarray) -> np.ndarray:
    """Maximum-ratio weights ``conj(a1) conj(h)`` per antenna."""
    h_row = np.asarray(h_row)
    a1 = np.asarray(a1)
    if h_row.shape != a1.shape:
        raise ValueError("channel row and gain vector must have equal length")
    return np.conj(a1) * np.conj(h_row)


def _powers_from_db(entries, reference: float = 1.0) -> list[float]:
    return [reference * 10.0 ** (float(db) / 10.0) for db in entries]


def scenario_from_json(doc: str | Mapping) -> UlaLosScenario:
    """Load a line-of-sight scenario record.

    Keys: ``antennas``; one of ``angles_deg`` or ``sine_angles``; one of
    ``powers`` (linear) or ``powers_db`` (relative to user 1 at unit power);
    optional ``blocker`` object with the same angle/power choices; optional
    ``spacing_wavelengths``.
    """
    data = json.loads(doc) if isinstance(doc, str) else dict(doc)
    known = {"antennas", "angles_deg", "sine_angles", "powers", "powers_db", "blocker",
             "spacing_wavelengths"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    spacing = float(data.get("spacing_wavelengths", 0.5))
    if ("angles_deg" in data) == ("sine_angles" in data):
        raise ValueError("exactly one of angles_deg or sine_angles is required")
    if "angles_deg" in data:
        angles = [UlaLosScenario.sine_angle(a, spacing) for a in data["angles_deg"]]
    else:
        angles = [float(a) for a in data["sine_angles"]]
    if ("powers" in data) == ("powers_db" in data):
        raise ValueError("exactly one of powers or powers_db is required")
    powers = ([float(p) for p in data["powers"]] if "powers" in data
              else _powers_from_db(data["powers_db"]))
    if len(powers) != len(angles):
        raise ValueError("powers and angles must have equal length")
    blocker_power, blocker_angle = 0.0, 0.0
    if "blocker" in data:
        blk = data["blocker"]
        if "angle_deg" in blk:
            blocker_angle = UlaLosScenario.sine_angle(blk["angle_deg"], spacing)
        else:
            blocker_angle = float(blk["sine_angle"])
        blocker_power = (float(blk["power"]) if "power" in blk
                         else _powers_from_db([blk["power_db"]])[0])
    return UlaLosScenario(
        antennas=int(data["antennas"]),
        user_powers=tuple(powers),
        user_angles=tuple(angles),
        blocker_power=blocker_power,
        blocker_angle=blocker_angle,
        spacing_wavelengths=spacing,
    )
