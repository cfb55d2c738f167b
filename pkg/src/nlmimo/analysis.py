"""Closed-form distortion and rate analysis after linear decoding.

The exact engine sums third-degree mixing products over all transmitter
triples, weighting each by its ambiguity kernel and its spatial signature
against the decoder weights.  Around it sit the line-of-sight closed forms,
the dominant-term case studies, the effective-SINR bound, and the
spatially-uncorrelated comparison model.

Convention: the degree-3 correlation transform carries the combinatorial
factor 2 explicitly in this module; the ambiguity tables are defined without
it.  The waveform-level oracle pins this bookkeeping.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .channel import array_gain
from .hermite import OddHermiteSeries, degree_weight
from .pulses import AmbiguityTable

__all__ = [
    "FrequencyIndexSets",
    "DistortionAutocorrelation",
    "SinrEntry",
    "nu_index",
    "term_census",
    "third_degree_spatial_correlation",
    "error_autocorrelation",
    "los_mrc_error_autocorrelation",
    "case_one_user_one_blocker",
    "case_multiuser",
    "effective_sinr",
    "gain_loss_rho",
    "fixed_gain_sinr",
    "ucd_model",
    "distortion_cross_correlation_general",
    "THIRD_DEGREE_FACTOR",
]

# 2!*1! from the degree-3 Gaussian correlation transform; kept out of the
# ambiguity tables on purpose.
THIRD_DEGREE_FACTOR = 2.0


def nu_index(k: int, kp: int, kpp: int, n_users: int) -> int:
    """Frequency-shift index of a transmitter triple.

    Indices count from 1; the blocker is ``n_users + 1``.  The shift is
    ``I(k) + I(k') - I(k'')`` with ``I`` the blocker indicator, so it lands
    in ``{-1, 0, 1, 2}``.
    """
    top = n_users + 1
    for idx in (k, kp, kpp):
        if not 1 <= idx <= top:
            raise IndexError(f"transmitter index {idx} outside 1..{top}")
    ind = lambda i: 1 if i == top else 0
    return ind(k) + ind(kp) - ind(kpp)


@dataclass(frozen=True)
class FrequencyIndexSets:
    """All transmitter triples grouped by frequency-shift index.

    ``blocker_power_counts[nu][p]`` counts the triples of shift ``nu`` whose
    product carries the blocker power to the ``p``-th power.
    """

    n_users: int
    sets: Mapping[int, tuple[tuple[int, int, int], ...]]
    blocker_power_counts: Mapping[int, Mapping[int, int]]

    @property
    def counts(self) -> dict[int, int]:
        return {nu: len(triples) for nu, triples in self.sets.items()}


def term_census(n_users: int) -> FrequencyIndexSets:
    """Enumerate the ``(K+1)^3`` mixing triples and their blocker exposure.

    The totals per shift index are ``(K^2, 2K + K^3, 1 + 2K^2, K)`` for
    ``nu = (-1, 0, 1, 2)``.
    """
    if n_users < 1:
        raise ValueError("need at least one served user")
    top = n_users + 1
    sets: dict[int, list[tuple[int, int, int]]] = {-1: [], 0: [], 1: [], 2: []}
    powers: dict[int, dict[int, int]] = {nu: {0: 0, 1: 0, 2: 0, 3: 0} for nu in sets}
    for k in range(1, top + 1):
        for kp in range(1, top + 1):
            for kpp in range(1, top + 1):
                nu = nu_index(k, kp, kpp, n_users)
                sets[nu].append((k, kp, kpp))
                exposure = sum(1 for i in (k, kp, kpp) if i == top)
                powers[nu][exposure] += 1
    return FrequencyIndexSets(
        n_users=n_users,
        sets={nu: tuple(v) for nu, v in sets.items()},
        blocker_power_counts={nu: dict(v) for nu, v in powers.items()},
    )


@dataclass(frozen=True)
class DistortionAutocorrelation:
    """Autocorrelation of the decoded distortion error at integer lags."""

    lags: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    per_nu: Mapping[int, np.ndarray] | None = field(default=None, repr=False)
    components: Mapping[str, np.ndarray] | None = field(default=None, repr=False)
    label: str = "exact"
    validity: str | None = None

    def at(self, lag: int) -> complex:
        idx = list(self.lags).index(lag)
        return complex(self.values[idx])


def _gamma_at(tables: Mapping[int, AmbiguityTable], nu: int, lags) -> np.ndarray:
    return np.array([tables[nu].at(int(l)) for l in np.atleast_1d(lags)])


def _triple_projection(h: np.ndarray, coupled: np.ndarray) -> np.ndarray:
    # c[k,kp,kpp] = sum_m coupled_m h_km h_kpm conj(h_kppm)
    return np.einsum("m,km,pm,qm->kpq", coupled, h, h, np.conj(h))


def third_degree_spatial_correlation(
    h: np.ndarray,
    a3: np.ndarray,
    powers: Sequence[float],
    tables: Mapping[int, AmbiguityTable],
    m: int,
    mp: int,
    lag: int,
) -> complex:
    """One antenna-pair entry of the sampled third-degree cross-correlation.

    ``h`` is the ``(K+1, M)`` channel matrix (blocker last), ``a3`` the
    per-antenna third-degree coefficients, ``powers`` the received powers.
    Antenna indices are 0-based.
    """
    h = np.asarray(h)
    n_tx, n_m = h.shape
    a3 = np.broadcast_to(np.asarray(a3, dtype=complex), (n_m,))
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (n_tx,):
        raise ValueError("powers must have one entry per transmitter")
    census = term_census(n_tx - 1)
    total = 0.0 + 0.0j
    for nu, triples in census.sets.items():
        if nu == 2:
            continue  # filtered out by the receive band; kernel is numerically zero
        acc = 0.0 + 0.0j
        for (k, kp, kpp) in triples:
            hbar_m = h[k - 1, m] * h[kp - 1, m] * np.conj(h[kpp - 1, m])
            hbar_mp = h[k - 1, mp] * h[kp - 1, mp] * np.conj(h[kpp - 1, mp])
            acc += powers[k - 1] * powers[kp - 1] * powers[kpp - 1] * hbar_m * np.conj(hbar_mp)
        total += tables[nu].at(lag) * acc
    return THIRD_DEGREE_FACTOR * a3[m] * np.conj(a3[mp]) * total


def error_autocorrelation(
    h: np.ndarray,
    a3: np.ndarray,
    weights: np.ndarray,
    powers: Sequence[float],
    tables: Mapping[int, AmbiguityTable],
    lags: Sequence[int] = (0,),
) -> DistortionAutocorrelation:
    """Exact decoded-distortion autocorrelation for one user's weights.

    Evaluates the full antenna double sum; each transmitter triple
    contributes its power product times the squared projection of its
    composite channel onto the coupled weights ``w_m a3_m``.
    """
    h = np.asarray(h)
    n_tx, n_m = h.shape
    a3 = np.broadcast_to(np.asarray(a3, dtype=complex), (n_m,))
    weights = np.asarray(weights, dtype=complex)
    if weights.shape != (n_m,):
        raise ValueError("weights must have one entry per antenna")
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (n_tx,):
        raise ValueError("powers must have one entry per transmitter")
    census = term_census(n_tx - 1)
    proj = _triple_projection(h, weights * a3)
    p3 = powers[:, None, None] * powers[None, :, None] * powers[None, None, :]
    weight_cube = p3 * np.abs(proj) ** 2
    lags_arr = np.asarray(list(lags), dtype=int)
    values = np.zeros(len(lags_arr), dtype=complex)
    per_nu: dict[int, np.ndarray] = {}
    for nu, triples in census.sets.items():
        if nu == 2:
            continue
        s_nu = sum(weight_cube[k - 1, kp - 1, kpp - 1] for (k, kp, kpp) in triples)
        vals = THIRD_DEGREE_FACTOR * s_nu * _gamma_at(tables, nu, lags_arr)
        per_nu[nu] = vals
        values += vals
    return DistortionAutocorrelation(lags=lags_arr, values=values, per_nu=per_nu)


def los_mrc_error_autocorrelation(
    angles: Sequence[float],
    powers: Sequence[float],
    antennas: int,
    a3: complex,
    tables: Mapping[int, AmbiguityTable],
    user: int,
    lags: Sequence[int] = (0,),
    a1: complex = 1.0,
) -> DistortionAutocorrelation:
    """Line-of-sight closed form: the double sum collapses to array gains.

    ``angles`` and ``powers`` cover all transmitters (blocker last); the
    decoded user counts from 1.  Identical amplifiers across the array are
    assumed, with maximum-ratio weights ``conj(a1) conj(h)``.
    """
    angles = np.asarray(angles, dtype=float)
    powers = np.asarray(powers, dtype=float)
    n_tx = len(angles)
    census = term_census(n_tx - 1)
    lags_arr = np.asarray(list(lags), dtype=int)
    values = np.zeros(len(lags_arr), dtype=complex)
    scale = THIRD_DEGREE_FACTOR * abs(a1) ** 2 * abs(a3) ** 2
    per_nu: dict[int, np.ndarray] = {}
    for nu, triples in census.sets.items():
        if nu == 2:
            continue
        s_nu = 0.0
        for (k, kp, kpp) in triples:
            phi = angles[k - 1] + angles[kp - 1] - angles[kpp - 1] - angles[user - 1]
            s_nu += (
                powers[k - 1] * powers[kp - 1] * powers[kpp - 1] * array_gain(phi, antennas)
            )
        vals = scale * s_nu * _gamma_at(tables, nu, lags_arr)
        per_nu[nu] = vals
        values += vals
    return DistortionAutocorrelation(
        lags=lags_arr, values=values, per_nu=per_nu, label="los-mrc-closed-form"
    )


def case_one_user_one_blocker(
    p1: float,
    p2: float,
    phi1: float,
    phi2: float,
    antennas: int,
    a3: complex,
    tables: Mapping[int, AmbiguityTable],
    lags: Sequence[int] = (0,),
) -> tuple[DistortionAutocorrelation, str]:
    """Exact three-term autocorrelation for one served user plus a blocker.

    Returns the composition by term class and the dominant-term label for
    the four regimes spanned by blocker strength and array size.
    """
    lags_arr = np.asarray(list(lags), dtype=int)
    g12 = array_gain(phi1 - phi2, antennas)
    g21 = array_gain(phi2 - phi1, antennas)
    m2 = float(antennas) ** 2
    s = THIRD_DEGREE_FACTOR * abs(a3) ** 2
    c_m1 = s * p1**2 * p2 * g12 * _gamma_at(tables, -1, lags_arr)
    c_0 = s * (p1**3 + 2 * p1 * p2**2) * m2 * _gamma_at(tables, 0, lags_arr)
    c_p1 = s * (2 * p1**2 * p2 + p2**3) * g21 * _gamma_at(tables, 1, lags_arr)
    values = c_m1 + c_0 + c_p1
    many = m2 > (p2 / p1 if p1 > 0 else np.inf)
    strong = p2 > p1
    label = ("strong" if strong else "negligible") + "-blocker/" + ("many" if many else "few") + "-antennas"
    components = {
        "inband-cubic": s * p1**3 * m2 * _gamma_at(tables, 0, lags_arr),
        "coherent-quadratic": s * 2 * p1 * p2**2 * m2 * _gamma_at(tables, 0, lags_arr),
        "blocker-cubic": s * p2**3 * g21 * _gamma_at(tables, 1, lags_arr),
        "shift-minus": c_m1,
        "shift-plus-cross": s * 2 * p1**2 * p2 * g21 * _gamma_at(tables, 1, lags_arr),
    }
    autocorr = DistortionAutocorrelation(
        lags=lags_arr,
        values=values,
        components=components,
        label="one-user-one-blocker",
        validity=label,
    )
    return autocorr, label


_VARIANTS = ("no-dominant", "one-dominant", "blocker", "blocker-in-lobe")


def case_multiuser(
    powers: Sequence[float],
    angles: Sequence[float],
    antennas: int,
    a3: complex,
    tables: Mapping[int, AmbiguityTable],
    variant: str,
    user: int,
    blocker_power: float = 0.0,
    blocker_angle: float = 0.0,
    lags: Sequence[int] = (0,),
) -> DistortionAutocorrelation:
    """Dominant-term approximations for the multiuser regimes.

    ``powers``/``angles`` describe the served users only.  Preconditions of
    each approximation are checked with warnings, not errors, and echoed in
    the ``validity`` tag.
    """
    if variant not in _VARIANTS:
        raise ValueError(f"variant must be one of {_VARIANTS}")
    powers = np.asarray(powers, dtype=float)
    angles = np.asarray(angles, dtype=float)
    lags_arr = np.asarray(list(lags), dtype=int)
    m2 = float(antennas) ** 2
    s = THIRD_DEGREE_FACTOR * abs(a3) ** 2
    g0 = _gamma_at(tables, 0, lags_arr)
    g1 = _gamma_at(tables, 1, lags_arr)
    pk = powers[user - 1]

    if variant == "no-dominant":
        if blocker_power > 0:
            warnings.warn("no-dominant approximation assumes no blocker")
        spread = powers.max() / powers.min()
        if spread > 10:
            warnings.warn("no-dominant approximation assumes comparable powers")
        rest = np.sum(powers**2) - pk**2
        values = s * g0 * (pk**3 + 2 * pk * rest) * m2
        validity = "power-controlled, no blocker, large array"
    elif variant == "one-dominant":
        chi = int(np.argmax(powers)) + 1
        p_chi = powers[chi - 1]
        others = np.delete(powers, chi - 1)
        if others.size and p_chi < 10 * others.max():
            warnings.warn("one-dominant approximation assumes a clearly dominant user")
        if user == chi:
            values = s * g0 * p_chi**3 * m2
        else:
            g_sep = array_gain(angles[chi - 1] - angles[user - 1], antennas)
            values = s * g0 * (p_chi**3 * g_sep + 2 * m2 * pk * p_chi**2)
        validity = f"dominant user {chi}"
    else:
        if blocker_power**2 <= np.sum(powers**2):
            warnings.warn("blocker approximations assume the blocker dominates in power")
        sep = abs(blocker_angle - angles[user - 1]) % (2 * np.pi)
        in_lobe = min(sep, 2 * np.pi - sep) < 2 * np.pi / antennas
        if variant == "blocker-in-lobe":
            if not in_lobe:
                warnings.warn("blocker is outside the user's main lobe")
            values = s * m2 * (2 * g0 * blocker_power**2 * pk + g1 * blocker_power**3)
            validity = "blocker inside main lobe"
        else:
            if in_lobe:
                warnings.warn("blocker sits inside the user's main lobe; use blocker-in-lobe")
            g_sep = array_gain(blocker_angle - angles[user - 1], antennas)
            values = s * (2 * g0 * blocker_power**2 * pk * m2 + g1 * blocker_power**3 * g_sep)
            validity = "strong out-of-band blocker"

    return DistortionAutocorrelation(
        lags=lags_arr,
        values=np.asarray(values, dtype=complex),
        label=f"case-study/{variant}",
        validity=validity,
    )


@dataclass(frozen=True)
class SinrEntry:
    """One user's effective-SINR budget under the moment bound."""

    power: float
    gain_sq: float
    interference: float
    noise: float
    distortion: float
    flavor: str = "exact"
    rho: float | None = None
    d_prime: float | None = None

    @property
    def sinr(self) -> float:
        denom = self.interference + self.noise + self.distortion
        if denom <= 0:
            raise ValueError("SINR denominator must be positive")
        return self.power * self.gain_sq / denom

    @property
    def rate(self) -> float:
        """Achievable rate ``log2(1 + SINR)`` in bits per channel use."""
        return math.log2(1.0 + self.sinr)


def effective_sinr(
    gain_sq: float,
    interference: float,
    noise: float,
    distortion: float,
    power: float,
    flavor: str = "exact",
) -> SinrEntry:
    """Assemble the moment-based SINR entry from its budget terms."""
    for name, v in (("interference", interference), ("noise", noise), ("distortion", distortion)):
        if v < 0:
            raise ValueError(f"{name} must be non-negative")
    entry = SinrEntry(
        power=power,
        gain_sq=gain_sq,
        interference=interference,
        noise=noise,
        distortion=distortion,
        flavor=flavor,
    )
    entry.sinr  # validates the denominator
    return entry


def gain_loss_rho(a1: Sequence[complex]) -> float:
    """Decoding-gain loss from unequal linear gains across the array.

    ``|sum |a1|^2|^2 / (M sum |a1|^4)``; equals 1 exactly when all the
    moduli agree (Cauchy-Schwarz) and is below 1 otherwise.
    """
    a1 = np.asarray(a1, dtype=complex)
    if a1.size == 0 or not np.any(a1):
        raise ValueError("a1 must be a non-zero vector")
    sq = np.abs(a1) ** 2
    return float(np.sum(sq) ** 2 / (a1.size * np.sum(sq**2)))


def fixed_gain_sinr(
    a1: Sequence[complex],
    user_power: float,
    user_powers: Sequence[float],
    noise_psd_over_t: float,
    distortion: float,
) -> SinrEntry:
    """Closed-form SINR for fixed linear gains over i.i.d. unit fading.

    Under maximum-ratio combining the gain loss and the rescaled distortion
    ``D' = M D / sum |a1|^4`` carry all dependence on the gain spread:
    ``SINR = rho P M^2 / (sum P' M + M N0/T + D')``.
    """
    a1 = np.asarray(a1, dtype=complex)
    m = a1.size
    rho = gain_loss_rho(a1)
    d_prime = m * distortion / float(np.sum(np.abs(a1) ** 4))
    interference = float(np.sum(user_powers)) * m
    noise = m * noise_psd_over_t
    return SinrEntry(
        power=user_power,
        gain_sq=rho * m**2,
        interference=interference,
        noise=noise,
        distortion=d_prime,
        flavor="fixed-gain",
        rho=rho,
        d_prime=d_prime,
    )


def ucd_model(
    h: np.ndarray,
    powers: Sequence[float],
    kappa: float,
    weights: np.ndarray,
) -> tuple[np.ndarray, float]:
    """Spatially-uncorrelated comparison model: diagonal, temporally white.

    Distortion at antenna ``m`` has variance ``kappa sum_k |h_km|^2 P_k``
    and no cross-antenna or cross-lag correlation.  Returns the per-antenna
    variances and the decoded error variance ``sum_m |w_m|^2 var_m`` (equal
    to ``kappa M sum_k P_k`` under unit-modulus channels and weights).
    """
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    h = np.asarray(h)
    powers = np.asarray(powers, dtype=float)
    if h.shape[0] != powers.size:
        raise ValueError("one power per channel row required")
    diag = kappa * np.einsum("km,k->m", np.abs(h) ** 2, powers)
    err = float(np.sum(np.abs(np.asarray(weights)) ** 2 * diag))
    return diag, err


def distortion_cross_correlation_general(
    series_m: OddHermiteSeries | Mapping[int, complex],
    series_mp: OddHermiteSeries | Mapping[int, complex],
    r: complex,
    sigma_m: float = 1.0,
    sigma_mp: float = 1.0,
) -> complex:
    """Distortion cross-correlation over all odd degrees of two amplifiers.

    ``sum_{d >= 3} a_dm conj(a_dmp) (sigma_m sigma_mp)^d w_d r |r|^(d-1)``
    with ``r`` the normalized input cross-correlation; degree 1 is the
    linear part and excluded by definition of the distortion.
    """
    coeffs_m = series_m.coeffs if isinstance(series_m, OddHermiteSeries) else series_m
    coeffs_mp = series_mp.coeffs if isinstance(series_mp, OddHermiteSeries) else series_mp
    if abs(r) > 1 + 1e-9:
        raise ValueError("normalized correlation must satisfy |r| <= 1")
    total = 0.0 + 0.0j
    for d in set(coeffs_m) & set(coeffs_mp):
        if d < 3:
            continue
        total += (
            coeffs_m[d]
            * np.conj(coeffs_mp[d])
            * (sigma_m * sigma_mp) ** d
            * degree_weight(d)
            * r
            * abs(r) ** (d - 1)
        )
    return complex(total)
