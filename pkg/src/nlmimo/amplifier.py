"""Quasi-memoryless amplifier models and their Hermite-basis representation.

An amplifier is described either by its real passband polynomial or by the
equivalent complex baseband polynomial ``y = sum_d b_d x |x|^(d-1)`` over odd
degrees.  At a given Gaussian input power the model has an equivalent
expansion in the orthogonal basis whose first coefficient is the effective
linear gain; the remaining ones generate the uncorrelated distortion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import brentq

from .hermite import (
    DEGREE_CAP_DEFAULT,
    OddHermiteSeries,
    basis_change,
    eval_odd_hermite,
    _validate_odd_coeffs,
)

__all__ = [
    "PassbandPolynomial",
    "PolynomialModel",
    "HermiteCoefficients",
    "passband_to_baseband",
    "baseband_eval",
    "passband_eval",
    "hermite_at_power",
    "hermite_to_polynomial",
    "desensitization_curve",
    "decompose",
    "gan_reference_model",
    "one_db_compression_power",
    "model_from_json",
    "model_to_json",
    "GAN_P1DB",
]

_FLAVORS = ("memoryless", "quasi-memoryless")


@dataclass(frozen=True)
class PassbandPolynomial:
    """Odd-degree passband polynomial ``yhat = sum_d bhat_d xhat^d``.

    The memoryless flavor carries real coefficients and admits a direct
    time-domain passband evaluation; the quasi-memoryless flavor has complex
    coefficients that only make sense after baseband conversion.  Even-degree
    terms produce no in-band component and are not stored.
    """

    coeffs: Mapping[int, complex]
    flavor: str = "quasi-memoryless"

    def __post_init__(self):
        if self.flavor not in _FLAVORS:
            raise ValueError(f"flavor must be one of {_FLAVORS}")
        coeffs = _validate_odd_coeffs(self.coeffs, 2 * DEGREE_CAP_DEFAULT + 1)
        if self.flavor == "memoryless":
            for d, c in coeffs.items():
                if c.imag != 0.0:
                    raise ValueError(f"memoryless flavor requires real coefficients (degree {d})")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(self.coeffs)


@dataclass(frozen=True)
class PolynomialModel:
    """Complex baseband polynomial model ``y = sum_d b_d x |x|^(d-1)``."""

    coeffs: Mapping[int, complex]
    degree_cap: int = DEGREE_CAP_DEFAULT

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _validate_odd_coeffs(self.coeffs, self.degree_cap))

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(self.coeffs)

    @property
    def max_degree(self) -> int:
        return max(self.coeffs, default=1)


@dataclass(frozen=True)
class HermiteCoefficients:
    """Basis coefficients ``a_d`` of a polynomial model at input power ``sigma_sq``.

    The amplifier acts on a Gaussian input ``u`` of power ``sigma_sq`` as
    ``sum_d a_d sigma^d H_d(u / sigma)``.
    """

    coeffs: Mapping[int, complex]
    sigma_sq: float
    degree_cap: int = DEGREE_CAP_DEFAULT

    def __post_init__(self):
        if not self.sigma_sq > 0:
            raise ValueError("sigma_sq must be positive")
        object.__setattr__(self, "coeffs", _validate_odd_coeffs(self.coeffs, self.degree_cap))

    @property
    def a1(self) -> complex:
        return self.coeffs.get(1, 0.0 + 0.0j)

    def distortion_series(self) -> OddHermiteSeries:
        """Degrees 3 and above, i.e. the part uncorrelated with the input."""
        return OddHermiteSeries({d: a for d, a in self.coeffs.items() if d >= 3})

    def series(self) -> OddHermiteSeries:
        return OddHermiteSeries(dict(self.coeffs))


def passband_to_baseband(pb: PassbandPolynomial) -> PolynomialModel:
    """Convert passband coefficients to the baseband polynomial model.

    Each odd degree scales by the central binomial factor
    ``C(d, (d+1)/2)``; even degrees never reach the signal band.
    """
    return PolynomialModel(
        {d: math.comb(d, (d + 1) // 2) * c for d, c in pb.coeffs.items()},
        degree_cap=max(pb.degrees, default=1),
    )


def baseband_eval(model: PolynomialModel, x):
    """Apply the baseband polynomial pointwise: ``sum_d b_d x |x|^(d-1)``."""
    xa = np.asarray(x, dtype=complex)
    ax = np.abs(xa)
    acc = np.zeros_like(xa)
    for d, b in model.coeffs.items():
        acc = acc + b * xa * ax ** (d - 1)
    return complex(acc) if np.ndim(x) == 0 else acc


def passband_eval(pb: PassbandPolynomial, samples):
    """Apply a memoryless passband polynomial to a real waveform.

    Only valid for the memoryless flavor; complex passband coefficients have
    no time-domain passband interpretation.  The waveform must be oversampled
    enough to represent the highest harmonic the polynomial creates.
    """
    if pb.flavor != "memoryless":
        raise ValueError("passband evaluation requires the memoryless flavor")
    xa = np.asarray(samples, dtype=float)
    acc = np.zeros_like(xa)
    for d, c in pb.coeffs.items():
        acc = acc + c.real * xa ** d
    return acc


def hermite_at_power(model: PolynomialModel, sigma_sq: float) -> HermiteCoefficients:
    """Re-expand a polynomial model in the orthogonal basis at a given power.

    With ``u = sigma * v`` and ``v`` unit-power Gaussian,
    ``u |u|^(d-1) = sigma^d v |v|^(d-1)``, and each monomial expands over the
    basis polynomials of equal and lower odd degree.  Collecting terms gives
    ``a_k = sum_{d >= k} b_d sigma^(d-k) m2h[d, k]`` with integer expansion
    coefficients from the triangular basis-change table.
    """
    if not sigma_sq > 0:
        raise ValueError("sigma_sq must be positive")
    table = basis_change(model.max_degree)
    sigma = math.sqrt(sigma_sq)
    a: dict[int, complex] = {}
    for k in table.degrees:
        j = table.index(k)
        acc = 0.0 + 0.0j
        for d, b in model.coeffs.items():
            if d >= k:
                acc += b * sigma ** (d - k) * table.monomial_to_hermite[table.index(d), j]
        a[k] = acc
    return HermiteCoefficients(a, sigma_sq=sigma_sq, degree_cap=model.degree_cap)


def hermite_to_polynomial(h: HermiteCoefficients) -> PolynomialModel:
    """Invert ``hermite_at_power``: recover the power-independent b-coefficients."""
    degrees = tuple(range(1, max(h.coeffs, default=1) + 1, 2))
    table = basis_change(degrees[-1])
    sigma = math.sqrt(h.sigma_sq)
    b: dict[int, complex] = {}
    for d in degrees:
        i = table.index(d)
        acc = 0.0 + 0.0j
        for k in degrees:
            if k >= d:
                acc += h.coeffs.get(k, 0.0) * sigma ** (k - d) * table.hermite_to_monomial[table.index(k), i]
        b[d] = acc
    return PolynomialModel(b, degree_cap=h.degree_cap)


def desensitization_curve(model: PolynomialModel, power_grid) -> np.ndarray:
    """Effective linear power gain ``|a_1(P)|^2`` over a grid of input powers.

    Normalized to the small-signal gain ``|b_1|^2``, so the returned values
    start at 1 and fall as compression sets in.
    """
    powers = np.asarray(power_grid, dtype=float)
    if np.any(powers <= 0):
        raise ValueError("powers must be positive")
    b1 = model.coeffs.get(1, 0.0)
    if b1 == 0:
        raise ValueError("model has no linear term to normalize against")
    out = np.empty(powers.shape, dtype=float)
    for i, p in np.ndenumerate(powers):
        out[i] = abs(hermite_at_power(model, p).a1) ** 2 / abs(b1) ** 2
    return out


def decompose(model: PolynomialModel, sigma_sq: float, samples):
    """Split amplifier output into the linear part and the distortion.

    The caller guarantees ``samples`` is approximately Gaussian with power
    ``sigma_sq``; under that condition the two parts are uncorrelated.  Their
    sum reconstructs the polynomial output exactly by construction.
    """
    a1 = hermite_at_power(model, sigma_sq).a1
    linear = a1 * np.asarray(samples, dtype=complex)
    distortion = baseband_eval(model, samples) - linear
    return linear, distortion


def gan_reference_model() -> PolynomialModel:
    """Bundled degree-9 baseband model of a measured 2.1 GHz GaN amplifier.

    Coefficients are scaled so that a unit-power input sits 9 dB below the
    saturation point.
    """
    return PolynomialModel(
        {
            1: 0.99995200 - 0.00981788j,
            3: -7.78231181e-03 + 0.0149617j,
            5: -2.69300297e-02 - 0.00736869j,
            7: 6.54370219e-03 + 0.00165554j,
            9: -4.54201816e-04 - 0.00011412j,
        }
    )


def one_db_compression_power(model: PolynomialModel, bracket=(1e-4, 10.0)) -> float:
    """Input power where the AM/AM output power is 1 dB under linear growth.

    Operational definition on the instantaneous transfer curve: find ``P``
    with ``|A(sqrt(P))|^2 / (|b_1|^2 P) = 10^(-0.1)``.
    """
    b1 = abs(model.coeffs.get(1, 0.0))
    if b1 == 0:
        raise ValueError("model has no linear term")

    def drop_db(p):
        amp = abs(baseband_eval(model, math.sqrt(p)))
        return 20.0 * math.log10(amp / (b1 * math.sqrt(p))) + 1.0

    return float(brentq(drop_db, *bracket))


# One-dB compression point of the bundled GaN model under the AM/AM
# definition above; stored so that compression-relative sweeps are
# reproducible without re-solving.  A regression test recomputes it.
GAN_P1DB = 2.6145170865755323

# Basis coefficients documented alongside the measured GaN model at unit
# input power.  The imaginary part of the degree-1 entry is recorded in the
# source data with the opposite sign of what the conversion from the
# polynomial coefficients yields (erratum candidate in the source data);
# imaginary parts of the source polynomial coefficients carry only six
# significant figures, which limits how closely the remaining imaginary
# parts can be reproduced.
GAN_REFERENCE_HERMITE = {
    1: 0.925351833 - 1.93167e-03j,
    3: -0.0427976467 + 2.95963e-03j,
    5: -2.90982131e-03 - 1.19691e-03j,
    7: -2.54033414e-03 - 6.2691e-04j,
    9: -4.54201816e-04 - 1.1412e-04j,
}


_MODEL_KEYS = {"degrees", "coeffs_re", "coeffs_im", "flavor"}


def model_from_json(doc: str | dict) -> PassbandPolynomial | PolynomialModel:
    """Load an amplifier model from its JSON document.

    Schema: ``{"degrees": [...], "coeffs_re": [...], "coeffs_im": [...],
    "flavor": "quasi-memoryless" | "memoryless" | "baseband"}``.  Passband
    flavors return a PassbandPolynomial; "baseband" returns the polynomial
    model directly.
    """
    data = json.loads(doc) if isinstance(doc, str) else dict(doc)
    unknown = set(data) - _MODEL_KEYS
    if unknown:
        raise ValueError(f"unknown model keys: {sorted(unknown)}")
    degrees = data["degrees"]
    re = data["coeffs_re"]
    im = data.get("coeffs_im", [0.0] * len(degrees))
    if not (len(degrees) == len(re) == len(im)):
        raise ValueError("degrees and coefficient arrays must have equal length")
    coeffs = {int(d): complex(r, i) for d, r, i in zip(degrees, re, im)}
    flavor = data.get("flavor", "baseband")
    if flavor == "baseband":
        return PolynomialModel(coeffs)
    return PassbandPolynomial(coeffs, flavor=flavor)


def model_to_json(model: PassbandPolynomial | PolynomialModel) -> str:
    flavor = model.flavor if isinstance(model, PassbandPolynomial) else "baseband"
    degrees = list(model.degrees)
    return json.dumps(
        {
            "degrees": degrees,
            "coeffs_re": [model.coeffs[d].real for d in degrees],
            "coeffs_im": [model.coeffs[d].imag for d in degrees],
            "flavor": flavor,
        }
    )
