"""Oversampled Monte Carlo simulator of the full uplink chain.

Runs the continuous-time system on a ``T/Q`` grid: Gaussian symbols, pulse
shaping, the adjacent-band blocker up-shift, flat or cluster channels,
band-limited thermal noise, per-antenna polynomial amplifiers, matched
filtering, symbol sampling, and linear decoding.  It serves as the
brute-force oracle for every closed form in the analysis layer and as the
engine for the rate-versus-antennas experiments.

Reproducibility: every random stream derives from
``(master_seed, realization_index, stream_id[, antenna])``, so results are
bit-identical for a fixed master seed regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .amplifier import PolynomialModel, baseband_eval, hermite_at_power, hermite_to_polynomial
from .channel import (
    DeviationModel,
    MultipathScenario,
    UlaLosScenario,
    draw_deviated_gains,
    draw_multipath_channel,
    los_channel,
    mrc_weights,
)
from .pulses import PulseSpec, aggregate_pulse, cycle_coefficients, matched_filter_taps, rrc_pulse

__all__ = [
    "SimConfig",
    "RealizationResult",
    "generate_uplink",
    "apply_lnas",
    "matched_filter_sample",
    "decode_and_estimate",
    "empirical_error_autocorrelation",
    "rate_vs_antennas",
    "run_realizations",
]

_STREAM_SYMBOLS = 1
_STREAM_NOISE = 2
_STREAM_DEVIATION = 4

_ANTENNA_BLOCK = 64


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one simulated uplink."""

    scenario: UlaLosScenario | MultipathScenario
    amp: PolynomialModel
    pulse: PulseSpec
    n_symbols: int = 10_000
    noise_psd: float = 0.0
    master_seed: int = 0
    deviation: DeviationModel | None = None
    realizations: int = 1

    def __post_init__(self):
        if self.n_symbols < 1000:
            raise ValueError("need at least 1000 symbols for stable correlation estimates")
        if self.noise_psd < 0:
            raise ValueError("noise_psd must be non-negative")
        if self.realizations < 1:
            raise ValueError("realizations must be positive")

    @property
    def antennas(self) -> int:
        return self.scenario.antennas

    @property
    def noise_power(self) -> float:
        """In-band noise power: flat density over three adjacent bands."""
        return self.noise_psd * 3.0 * self.pulse.bandwidth


@dataclass(frozen=True)
class RealizationResult:
    """Decoded-moment estimates of one or more realizations."""

    mean_xhat_xconj: np.ndarray = field(repr=False)  # per user
    mean_abs_xhat_sq: np.ndarray = field(repr=False)
    mean_abs_x_sq: np.ndarray = field(repr=False)  # empirical symbol power
    sigma_sq: np.ndarray = field(repr=False)  # per antenna
    n_symbols_used: int = 0

    @property
    def sinr(self) -> np.ndarray:
        # Normalizing by the empirical symbol power keeps the estimator's
        # own sampling noise out of the denominator.
        num = np.abs(self.mean_xhat_xconj) ** 2 / self.mean_abs_x_sq
        denom = self.mean_abs_xhat_sq - num
        return num / denom

    @property
    def rate(self) -> np.ndarray:
        return np.log2(1.0 + self.sinr)


def _rng(config: SimConfig, realization: int, stream: int, extra: int | None = None):
    key = [config.master_seed, realization, stream]
    if extra is not None:
        key.append(extra)
    return np.random.default_rng(key)


def _symbol_waveforms(config: SimConfig, realization: int):
    """Gaussian symbols and their pulse-shaped, power-scaled waveforms.

    Returns ``(symbols, waves)`` with shapes ``(n_tx, N)`` and
    ``(n_tx, L)``; the blocker waveform is up-shifted by one band.
    """
    spec = config.pulse
    Q = spec.oversampling
    n = config.n_symbols
    powers = config.scenario.all_powers
    n_tx = len(powers)
    rng = _rng(config, realization, _STREAM_SYMBOLS)
    symbols = (rng.standard_normal((n_tx, n)) + 1j * rng.standard_normal((n_tx, n))) / np.sqrt(2)
    p = rrc_pulse(spec)
    length = n * Q + len(p) - 1
    waves = np.empty((n_tx, length), dtype=complex)
    for k in range(n_tx):
        up = np.zeros(n * Q, dtype=complex)
        up[::Q] = math.sqrt(powers[k]) * symbols[k]
        waves[k] = fftconvolve(up, p)
    # adjacent-band blocker: carrier one bandwidth above the signal band
    t = np.arange(length) / Q * spec.symbol_period
    waves[-1] = waves[-1] * np.exp(2j * np.pi * spec.bandwidth * t)
    return symbols, waves


def _bandlimited_noise(config: SimConfig, realization: int, antenna: int, length: int):
    """Complex noise, flat density over ``[-3B/2, 3B/2]``, zero outside."""
    if config.noise_psd == 0.0:
        return 0.0
    spec = config.pulse
    fs = spec.oversampling / spec.symbol_period
    rng = _rng(config, realization, _STREAM_NOISE, antenna)
    white = (rng.standard_normal(length) + 1j * rng.standard_normal(length)) * np.sqrt(
        config.noise_psd * fs / 2.0
    )
    freqs = np.fft.fftfreq(length, d=1.0 / fs)
    mask = np.abs(freqs) <= 1.5 * spec.bandwidth
    return np.fft.ifft(np.fft.fft(white) * mask)


def _cycle0_lookup(spec: PulseSpec):
    """Even cycle-0 autocorrelation of the aggregate pulse on the grid."""
    base = cycle_coefficients(aggregate_pulse(spec), alpha_max=0)
    vals = base.at(0).real
    center = base.center
    def lookup(delta_samples: np.ndarray) -> np.ndarray:
        idx = center + np.asarray(delta_samples, dtype=int)
        idx = np.clip(idx, 0, len(vals) - 1)
        out = vals[idx]
        out = np.where(np.abs(delta_samples) >= center, 0.0, out)
        return out
    return lookup


class _Chain:
    """Shared state for one realization: channel, powers, per-antenna gains."""

    def __init__(self, config: SimConfig, realization: int):
        self.config = config
        self.realization = realization
        self.spec = config.pulse
        self.Q = self.spec.oversampling
        self.symbols, self.waves = _symbol_waveforms(config, realization)
        self.length = self.waves.shape[1]
        scenario = config.scenario
        if isinstance(scenario, UlaLosScenario):
            self.h = los_channel(scenario)
            self.paths = None
            self.sigma_sq = np.full(
                scenario.antennas,
                float(np.dot(np.abs(self.h[:, 0]) ** 2, scenario.all_powers))
                + config.noise_power,
            )
            # tap-0 effective symbol channel = h itself (root-Nyquist pulse)
            self.h_eff = self.h.copy()
            self.sync_lag = np.zeros(self.h.shape[0], dtype=int)
            self.max_delay = 0
        else:
            draw = draw_multipath_channel(scenario, self.Q, draw_index=realization)
            self.paths = draw
            self.max_delay = int(draw.tap_delays.max())
            self.sigma_sq = self._multipath_power(scenario, draw) + config.noise_power
            self.h_eff, self.sync_lag = self._multipath_best_tap(scenario, draw)
        self._per_antenna_gains()

    def _multipath_power(self, scenario: MultipathScenario, draw) -> np.ndarray:
        lookup = _cycle0_lookup(self.spec)
        n_tx, V = scenario.path_gains.shape
        powers = scenario.all_powers
        out = np.zeros(scenario.antennas)
        for k in range(n_tx):
            d = draw.tap_delays[k]
            overlap = lookup(d[:, None] - d[None, :])  # (V, V)
            g = draw.tap_gains[k]  # (V, M)
            out += powers[k] * np.real(np.einsum("vm,wm,vw->m", g, np.conj(g), overlap))
        return out

    def _multipath_best_tap(self, scenario: MultipathScenario, draw):
        """Per-user symbol-lag synchronization: pick the strongest tap.

        The symbol-rate tap gains are ``q_km[j] = sum_v c_kvm gamma0(jT - tau_v)``;
        decoding uses the lag with the largest array-summed power, which is
        what a synchronized single-tap receiver without temporal processing
        would lock to.
        """
        lookup = _cycle0_lookup(self.spec)
        n_tx, V = scenario.path_gains.shape
        n_lags = int(np.ceil(draw.tap_delays.max() / self.Q)) + 2
        h_eff = np.zeros((n_tx, scenario.antennas), dtype=complex)
        sync = np.zeros(n_tx, dtype=int)
        j_grid = np.arange(n_lags)
        for k in range(n_tx):
            overlap = lookup(j_grid[None, :] * self.Q - draw.tap_delays[k][:, None])  # (V, J)
            q = np.einsum("vm,vj->mj", draw.tap_gains[k], overlap)
            best = int(np.argmax(np.sum(np.abs(q) ** 2, axis=0)))
            sync[k] = best
            h_eff[k] = q[:, best]
        return h_eff, sync

    def _per_antenna_gains(self):
        config = self.config
        base = [hermite_at_power(config.amp, s) for s in self.sigma_sq]
        self.a1 = np.array([h.a1 for h in base])
        self.a3 = np.array([h.coeffs.get(3, 0.0) for h in base])
        self.models: list[PolynomialModel] | None = None
        if config.deviation is not None:
            rng_draw = self.realization
            products = draw_deviated_gains(config.deviation, config.antennas, draw_index=rng_draw)
            models = []
            a3_new = np.empty_like(self.a3)
            for m, h in enumerate(base):
                coeffs = dict(h.coeffs)
                coeffs[3] = products[m] / np.conj(self.a1[m])
                a3_new[m] = coeffs[3]
                models.append(
                    hermite_to_polynomial(type(h)(coeffs, sigma_sq=h.sigma_sq, degree_cap=h.degree_cap))
                )
            self.a3 = a3_new
            self.models = models

    def received_block(self, antennas: Sequence[int]) -> np.ndarray:
        """Pre-amplifier waveforms of a block of antennas, noise included."""
        config = self.config
        scenario = config.scenario
        if self.paths is None:
            u = self.h[:, antennas].T @ self.waves
        else:
            n_tx, V = scenario.path_gains.shape
            L = self.length
            stack = np.zeros((n_tx * V, L + self.max_delay), dtype=complex)
            coeff = np.empty((len(antennas), n_tx * V), dtype=complex)
            for k in range(n_tx):
                for v in range(V):
                    row = k * V + v
                    d = self.paths.tap_delays[k, v]
                    stack[row, d : d + L] = self.waves[k]
                    coeff[:, row] = self.paths.tap_gains[k, v, antennas]
            u = (coeff @ stack)[:, :L]
        if config.noise_psd > 0:
            u = u + np.array(
                [_bandlimited_noise(config, self.realization, int(m), self.length) for m in antennas]
            )
        return u

    def amplify(self, u_block: np.ndarray, antennas: Sequence[int]) -> np.ndarray:
        if self.models is None:
            return baseband_eval(self.config.amp, u_block)
        out = np.empty_like(u_block)
        for i, m in enumerate(antennas):
            out[i] = baseband_eval(self.models[m], u_block[i])
        return out


def _sample_indices(config: SimConfig, max_delay: int):
    """Symbol indices kept after matched filtering, transients removed.

    The leading margin also covers the channel delay spread, so that every
    kept estimate sees fully formed symbols and any synchronization lag can
    be applied without leaving the stream.
    """
    span = config.pulse.span
    Q = config.pulse.oversampling
    lead = span + 2 + int(np.ceil(max_delay / Q))
    tail = span + 1
    first, last = lead, config.n_symbols - tail
    if last <= first:
        raise ValueError("too few symbols for the configured pulse span")
    return first, last


def matched_filter_sample(waveforms: np.ndarray, spec: PulseSpec, n_symbols: int) -> np.ndarray:
    """Matched-filter a block of waveforms and sample at the symbol instants.

    ``waveforms`` rows must come from the pulse-shaping convolution above so
    that symbol ``n`` sits at sample ``n Q + 2 span Q`` of the filtered
    stream.  Edge transients are kept here; callers slice them off.
    """
    taps = matched_filter_taps(spec)
    Q = spec.oversampling
    offset = 2 * spec.span * Q
    filtered = fftconvolve(np.atleast_2d(waveforms), taps[None, :], axes=1)
    idx = offset + Q * np.arange(n_symbols)
    return filtered[:, idx]


def generate_uplink(config: SimConfig, realization_index: int = 0):
    """Per-antenna received waveforms (pre-amplifier) of one realization.

    Returns ``(u, symbols, chain)`` where ``u`` is the full ``(M, L)``
    waveform array; ``chain`` exposes the channel, per-antenna powers and
    basis gains used downstream.
    """
    chain = _Chain(config, realization_index)
    u = chain.received_block(np.arange(config.antennas))
    return u, chain.symbols, chain


def apply_lnas(config: SimConfig, u: np.ndarray, chain=None, realization_index: int = 0):
    """Amplify the received waveforms with the per-antenna polynomials."""
    if chain is None:
        chain = _Chain(config, realization_index)
    return chain.amplify(u, np.arange(u.shape[0])), chain.sigma_sq


def _decode_moments(config: SimConfig, chain: _Chain, y_samples: np.ndarray, keep: slice):
    scenario = config.scenario
    n_users = scenario.n_users
    mean_xx = np.empty(n_users, dtype=complex)
    mean_abs = np.empty(n_users)
    mean_x = np.empty(n_users)
    for k in range(n_users):
        w = mrc_weights(chain.h_eff[k], chain.a1)
        xhat = w @ y_samples
        lag = int(chain.sync_lag[k])
        symbols = chain.symbols[k, keep.start - lag : keep.stop - lag]
        mean_xx[k] = np.mean(xhat * np.conj(symbols))
        mean_abs[k] = np.mean(np.abs(xhat) ** 2)
        mean_x[k] = np.mean(np.abs(symbols) ** 2)
    return mean_xx, mean_abs, mean_x


def decode_and_estimate(config: SimConfig, realization_index: int = 0) -> RealizationResult:
    """Run one realization end to end and estimate the decoded moments.

    The effective SINR follows from the first and second moments of the
    symbol estimate with the transmit symbols at exactly unit power.
    Antennas are processed in blocks to bound memory.
    """
    chain = _Chain(config, realization_index)
    first, last = _sample_indices(config, chain.max_delay)
    m_total = config.antennas
    y_samples = np.empty((m_total, last - first), dtype=complex)
    for start in range(0, m_total, _ANTENNA_BLOCK):
        block = np.arange(start, min(start + _ANTENNA_BLOCK, m_total))
        u = chain.received_block(block)
        y = chain.amplify(u, block)
        samples = matched_filter_sample(y, config.pulse, config.n_symbols)
        y_samples[block] = samples[:, first:last]
    mean_xx, mean_abs, mean_x = _decode_moments(config, chain, y_samples, slice(first, last))
    return RealizationResult(
        mean_xhat_xconj=mean_xx,
        mean_abs_xhat_sq=mean_abs,
        mean_abs_x_sq=mean_x,
        sigma_sq=chain.sigma_sq,
        n_symbols_used=last - first,
    )


def empirical_error_autocorrelation(
    config: SimConfig,
    user: int,
    lags: Sequence[int],
    realization_index: int = 0,
    n_blocks: int = 20,
):
    """Monte Carlo estimate of the decoded-distortion autocorrelation.

    The distortion is extracted exactly as ``y - a1 u`` per antenna before
    decoding with the user's maximum-ratio weights.  Returns
    ``(lags, estimates, standard_errors)`` with the errors taken over
    ``n_blocks`` temporal blocks.
    """
    chain = _Chain(config, realization_index)
    first, last = _sample_indices(config, chain.max_delay)
    m_total = config.antennas
    d_samples = np.empty((m_total, last - first), dtype=complex)
    for start in range(0, m_total, _ANTENNA_BLOCK):
        block = np.arange(start, min(start + _ANTENNA_BLOCK, m_total))
        u = chain.received_block(block)
        y = chain.amplify(u, block)
        d = y - chain.a1[block, None] * u
        samples = matched_filter_sample(d, config.pulse, config.n_symbols)
        d_samples[block] = samples[:, first:last]
    w = mrc_weights(chain.h_eff[user - 1], chain.a1)
    e = w @ d_samples
    lags_arr = np.asarray(list(lags), dtype=int)
    max_lag = int(np.max(np.abs(lags_arr), initial=0))
    estimates = np.empty(len(lags_arr), dtype=complex)
    errors = np.empty(len(lags_arr))
    for i, lag in enumerate(lags_arr):
        head = e[max_lag : len(e) - max_lag]
        shifted = e[max_lag - lag : len(e) - max_lag - lag]
        prod = head * np.conj(shifted)
        estimates[i] = prod.mean()
        blocks = np.array_split(prod, n_blocks)
        means = np.array([b.mean() for b in blocks])
        errors[i] = np.sqrt(
            (np.var(means.real) + np.var(means.imag)) / n_blocks
        )
    return lags_arr, estimates, errors


def _one_realization(args):
    config, idx = args
    return idx, decode_and_estimate(config, idx)


def run_realizations(config: SimConfig, n_jobs: int = 1) -> list[RealizationResult]:
    """All realizations of a config, optionally in parallel, in fixed order."""
    indices = list(range(config.realizations))
    if n_jobs <= 1 or len(indices) == 1:
        return [decode_and_estimate(config, i) for i in indices]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        results = dict(pool.map(_one_realization, [(config, i) for i in indices]))
    return [results[i] for i in indices]


def rate_vs_antennas(
    config: SimConfig,
    antenna_counts: Sequence[int],
    user: int = 1,
    n_jobs: int = 1,
) -> list[dict]:
    """Mean decoded rate of one user versus array size.

    Every antenna count reuses the base config with the scenario resized;
    realizations differ in symbols, noise, and (for cluster channels) path
    phases.  Returns one record per antenna count with the mean rate and
    its standard error over realizations.
    """
    if list(antenna_counts) != sorted(antenna_counts):
        raise ValueError("antenna_counts must be ascending")
    rows = []
    for m in antenna_counts:
        scenario = replace(config.scenario, antennas=int(m))
        cfg = replace(config, scenario=scenario)
        results = run_realizations(cfg, n_jobs=n_jobs)
        rates = np.array([r.rate[user - 1] for r in results])
        rows.append(
            {
                "antennas": int(m),
                "mean_rate": float(rates.mean()),
                "stderr": float(rates.std(ddof=1) / np.sqrt(len(rates))) if len(rates) > 1 else 0.0,
                "realizations": len(rates),
            }
        )
    return rows
