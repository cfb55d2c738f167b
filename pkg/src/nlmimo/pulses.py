"""Pulse shaping and cyclostationary second-order statistics.

Everything here lives on a uniform grid of ``Q`` samples per symbol period
``T`` (``T = 1`` internally).  The aggregate pulse collects the overlap
products of the shaping filter; its Fourier coefficients over one symbol
period give the cycle-index correlations; cubing the aggregate pulse and
frequency-shifting yields the four third-degree distortion pulses; matched
filtering and symbol sampling compress those into the ambiguity tables that
drive every closed-form distortion result.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "PulseSpec",
    "AggregatePulse",
    "CycleCorrelation",
    "AmbiguityTable",
    "rrc_pulse",
    "aggregate_pulse",
    "cycle_coefficients",
    "third_degree_pulses",
    "ambiguity_functions",
    "pulse_spectrum",
    "write_third_degree_spectra_csv",
    "write_ambiguity_csv",
    "NU_VALUES",
]

NU_VALUES = (-1, 0, 1, 2)

DEFAULT_ALPHA_MAX = 4
DEFAULT_MAX_LAG = 10
DEFAULT_DTFT_POINTS = 256


@dataclass(frozen=True)
class PulseSpec:
    """Root-raised-cosine shaping on a ``T/Q`` grid.

    ``span`` symbols are kept on each side of the peak.  ``edge_taper``
    applies a raised-cosine window over that many outermost symbols of each
    tail before renormalization; it keeps spectral leakage of the truncated
    pulse below the numerical floors the distortion analysis relies on.
    Set it to 0 for plain rectangular truncation.
    """

    roll_off: float = 0.22
    oversampling: int = 16
    span: int = 32
    symbol_period: float = 1.0
    edge_taper: float = 1.0
    sampling_offset: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.roll_off <= 1.0:
            raise ValueError("roll_off must lie in [0, 1]")
        if self.oversampling < 8:
            raise ValueError("oversampling must be at least 8")
        if self.span < 16:
            raise ValueError("span must be at least 16 symbols")
        if self.symbol_period <= 0:
            raise ValueError("symbol_period must be positive")
        if not 0 <= self.edge_taper < self.span:
            raise ValueError("edge_taper must be non-negative and below span")

    @property
    def bandwidth(self) -> float:
        """Occupied bandwidth ``(1 + roll_off) / T``."""
        return (1.0 + self.roll_off) / self.symbol_period

    @property
    def n_taps(self) -> int:
        return 2 * self.span * self.oversampling + 1


def rrc_pulse(spec: PulseSpec) -> np.ndarray:
    """Sampled root-raised-cosine pulse, normalized to energy ``T``.

    The removable singularities at ``t = 0`` and ``t = +-T/(4 beta)`` are
    evaluated by their analytic limits.  After truncation (and the optional
    edge taper) the samples are rescaled so that ``sum |p|^2 T/Q = T``.
    """
    beta = spec.roll_off
    Q = spec.oversampling
    t = np.arange(-spec.span * Q, spec.span * Q + 1) / Q  # units of T
    if beta == 0.0:
        p = np.sinc(t)
    else:
        p = np.zeros_like(t)
        at_zero = np.abs(t) < 1e-12
        at_quarter = np.abs(np.abs(4 * beta * t) - 1.0) < 1e-10
        regular = ~(at_zero | at_quarter)
        tr = t[regular]
        num = np.sin(np.pi * tr * (1 - beta)) + 4 * beta * tr * np.cos(np.pi * tr * (1 + beta))
        den = np.pi * tr * (1 - (4 * beta * tr) ** 2)
        p[regular] = num / den
        p[at_zero] = 1 - beta + 4 * beta / np.pi
        p[at_quarter] = (beta / np.sqrt(2)) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta))
            + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta))
        )
    if spec.edge_taper > 0:
        start = spec.span - spec.edge_taper
        frac = (np.abs(t) - start) / spec.edge_taper
        frac = np.clip(frac, 0.0, 1.0)
        p = p * (0.5 * (1 + np.cos(np.pi * frac)))
    p = p / np.sqrt(np.sum(p**2) / Q)
    return p * np.sqrt(spec.symbol_period)


@dataclass(frozen=True)
class AggregatePulse:
    """Periodic overlap product ``gamma(t, tau)`` of the shaping pulse.

    ``values[i, j]`` holds the sum over symbol shifts of
    ``p(t_i - nT) p(t_i - nT - tau_j)`` for ``t_i = i T/Q`` on one period
    and ``tau_j`` on the full support grid.
    """

    spec: PulseSpec
    values: np.ndarray = field(repr=False)
    lag_indices: np.ndarray = field(repr=False)

    @property
    def lag_grid(self) -> np.ndarray:
        return self.lag_indices * (self.spec.symbol_period / self.spec.oversampling)

    @property
    def center(self) -> int:
        return len(self.lag_indices) // 2


def aggregate_pulse(spec: PulseSpec) -> AggregatePulse:
    """Build ``gamma(t, tau)`` on one period of ``t`` and the full lag grid."""
    Q = spec.oversampling
    p = rrc_pulse(spec)
    half = spec.span * Q
    lags = np.arange(-2 * half, 2 * half + 1)

    def lookup(idx: np.ndarray) -> np.ndarray:
        out = np.zeros(idx.shape)
        inside = (idx >= -half) & (idx <= half)
        out[inside] = p[idx[inside] + half]
        return out

    shifts = np.arange(-2 * spec.span - 2, 2 * spec.span + 3)
    values = np.empty((Q, len(lags)))
    for i in range(Q):
        base = i - shifts * Q
        left = lookup(base)
        right = lookup(base[:, None] - lags[None, :])
        values[i] = left @ right
    return AggregatePulse(spec=spec, values=values, lag_indices=lags)


@dataclass(frozen=True)
class CycleCorrelation:
    """Cycle-index Fourier coefficients of a periodic correlation function."""

    spec: PulseSpec
    alphas: tuple[int, ...]
    lag_indices: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)  # shape (n_alpha, n_lag), complex

    @property
    def lag_grid(self) -> np.ndarray:
        return self.lag_indices * (self.spec.symbol_period / self.spec.oversampling)

    def at(self, alpha: int) -> np.ndarray:
        return self.values[self.alphas.index(alpha)]

    @property
    def center(self) -> int:
        return len(self.lag_indices) // 2


def _cycle_transform(spec: PulseSpec, field2d: np.ndarray, lag_indices, alpha_max: int) -> CycleCorrelation:
    Q = spec.oversampling
    phases = np.arange(Q)
    alphas = tuple(range(-alpha_max, alpha_max + 1))
    rows = [
        (np.exp(-2j * np.pi * a * phases / Q) @ field2d.astype(complex)) / Q
        for a in alphas
    ]
    return CycleCorrelation(
        spec=spec, alphas=alphas, lag_indices=np.asarray(lag_indices), values=np.array(rows)
    )


def cycle_coefficients(gamma: AggregatePulse, alpha_max: int = DEFAULT_ALPHA_MAX) -> CycleCorrelation:
    """Fourier coefficients of the aggregate pulse over the symbol period.

    The pulse spectrum occupies less than ``2/T``, so coefficients with
    ``|alpha| >= 2`` sit at the truncation-leakage floor.
    """
    return _cycle_transform(gamma.spec, gamma.values, gamma.lag_indices, alpha_max)


def third_degree_pulses(
    gamma: AggregatePulse, alpha_max: int = DEFAULT_ALPHA_MAX
) -> dict[int, CycleCorrelation]:
    """Cycle coefficients of the four frequency-shifted cubed pulses.

    The shift index selects which mix of in-band and adjacent-band signals
    produced the product: ``gamma |gamma|^2 e^(j 2 pi nu B tau)`` for
    ``nu in (-1, 0, 1, 2)``.
    """
    cube = gamma.values * np.abs(gamma.values) ** 2
    tau = gamma.lag_grid
    out = {}
    for nu in NU_VALUES:
        shifted = cube * np.exp(2j * np.pi * nu * gamma.spec.bandwidth * tau)[None, :]
        out[nu] = _cycle_transform(gamma.spec, shifted, gamma.lag_indices, alpha_max)
    return out


@dataclass(frozen=True)
class AmbiguityTable:
    """Symbol-sampled third-degree correlation kernel at one shift index."""

    nu: int
    spec: PulseSpec
    lags: np.ndarray = field(repr=False)  # integer symbol lags
    values: np.ndarray = field(repr=False)  # complex, one per lag
    theta: np.ndarray = field(repr=False)  # normalized frequency grid
    dtft: np.ndarray = field(repr=False)

    def at(self, lag: int) -> complex:
        idx = int(lag) + (len(self.lags) - 1) // 2
        if not 0 <= idx < len(self.lags):
            raise ValueError(f"lag {lag} outside table range")
        return complex(self.values[idx])


def ambiguity_functions(
    spec: PulseSpec,
    max_lag: int = DEFAULT_MAX_LAG,
    alpha_max: int = DEFAULT_ALPHA_MAX,
    dtft_points: int = DEFAULT_DTFT_POINTS,
) -> dict[int, AmbiguityTable]:
    """Matched-filtered, symbol-sampled third-degree correlation kernels.

    For each shift index the cycle coefficients of the cubed pulse are
    convolved with the matching cycle coefficients of the aggregate pulse and
    read out at integer symbol lags:
    ``g3nu[l] = (1/T^2) sum_alpha (g3nu^(alpha) * g^(alpha))(l T)``.

    The table carries no degree-3 combinatorial factor; the spatial
    correlation assembly in the analysis layer applies it explicitly.
    """
    if max_lag > spec.span:
        raise ValueError("max_lag must not exceed the pulse span")
    Q = spec.oversampling
    T = spec.symbol_period
    gamma = aggregate_pulse(spec)
    base = cycle_coefficients(gamma, alpha_max)
    third = third_degree_pulses(gamma, alpha_max)
    theta = (np.arange(dtft_points) - dtft_points // 2) / dtft_points
    lags = np.arange(-max_lag, max_lag + 1)
    tables: dict[int, AmbiguityTable] = {}
    for nu in NU_VALUES:
        total = np.zeros(2 * max_lag + 1, dtype=complex)
        for a in base.alphas:
            conv = np.convolve(third[nu].at(a), base.at(a)) * (T / Q)
            center = len(gamma.lag_indices) - 1
            samples = conv[center + lags * Q]
            total += samples
        total /= T**2
        dtft = np.array([np.sum(total * np.exp(-2j * np.pi * th * lags)) for th in theta])
        tables[nu] = AmbiguityTable(
            nu=nu, spec=spec, lags=lags, values=total, theta=theta, dtft=dtft
        )
    return tables


def pulse_spectrum(cycle: CycleCorrelation, alpha: int = 0, pad_factor: int = 4):
    """Continuous Fourier transform of one cycle coefficient over lag.

    Returns ``(f, value)`` with ``f`` in units of ``1/T``.  Used for the
    spectral-density views of the distortion pulses.
    """
    Q = cycle.spec.oversampling
    T = cycle.spec.symbol_period
    vals = cycle.at(alpha)
    n = len(vals) * pad_factor
    spectrum = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(vals), n)) * (T / Q)
    freqs = np.fft.fftshift(np.fft.fftfreq(n, d=T / Q))
    return freqs, spectrum


def write_third_degree_spectra_csv(path, spec: PulseSpec, alpha_max: int = DEFAULT_ALPHA_MAX,
                                   term_weights: dict[int, int] | None = None) -> None:
    """Emit the zero-cycle spectra of the four third-degree pulses as CSV.

    Columns: ``f`` (units 1/T) then ``gamma3_nu=<nu>`` for each shift index,
    then the receive-pulse spectrum ``gamma0``.  Optional integer weights
    scale each shift column (used to display census-weighted sums).
    """
    gamma = aggregate_pulse(spec)
    base = cycle_coefficients(gamma, alpha_max)
    third = third_degree_pulses(gamma, alpha_max)
    f, g0 = pulse_spectrum(base)
    cols = {}
    for nu in NU_VALUES:
        _, s = pulse_spectrum(third[nu])
        w = 1 if term_weights is None else term_weights.get(nu, 1)
        cols[nu] = w * np.abs(s)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["f"] + [f"gamma3_nu={nu}" for nu in NU_VALUES] + ["gamma0"])
        for i in range(len(f)):
            w.writerow([f"{f[i]:.6f}"] + [f"{cols[nu][i]:.10e}" for nu in NU_VALUES]
                       + [f"{np.abs(g0[i]):.10e}"])


def write_ambiguity_csv(lag_path, dtft_path, tables: dict[int, AmbiguityTable]) -> None:
    """Emit ambiguity magnitudes per lag and their transforms per frequency."""
    t0 = tables[0]
    with open(lag_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lag", "abs_gamma3_0", "abs_gamma3_1", "abs_gamma3_minus1", "abs_gamma3_2"])
        for i, lag in enumerate(t0.lags):
            w.writerow(
                [int(lag)]
                + [f"{abs(tables[nu].values[i]):.10e}" for nu in (0, 1, -1, 2)]
            )
    with open(dtft_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "spectrum_gamma3_0", "spectrum_gamma3_1", "spectrum_gamma3_minus1"])
        for i, th in enumerate(t0.theta):
            w.writerow(
                [f"{th:.6f}"]
                + [f"{tables[nu].dtft[i].real:.10e}" for nu in (0, 1, -1)]
            )


def matched_filter_taps(spec: PulseSpec) -> np.ndarray:
    """Receive-filter taps ``p(-t)/T`` scaled for discrete convolution.

    Discrete convolution with these taps approximates
    ``(1/T) integral p(s - t) y(s) ds`` on the ``T/Q`` grid (the ``T/Q``
    quadrature step cancels one factor of ``T``); the RRC is real and
    symmetric so no conjugate reversal is needed.
    """
    p = rrc_pulse(spec)
    return p / spec.oversampling
