"""Closed-form propagator pieces for the two-mode dissipative master equation.

The mean-amplitude flow of the two modes is generated by the traceless matrix

    G = [[ c,                -(i Omega_ab + k_ab)],
         [-(i Omega_ba + k_ba),               -c ]],

so its exponential exp(t G) = [[f1, l1], [l2, f2]] is unimodular
(f1 f2 - l1 l2 = 1) and expressible through cosh/sinh of r t with
r^2 = c^2 + (i Omega_ba + k_ba)(i Omega_ab + k_ab).  All formulas below use
cosh(rt) and sinh(rt)/r, which are even in r, so the square-root branch of r
is immaterial.  The physical amplitude map carries an extra overall factor
exp(-R t) with R = k_m + i omega_m.

The full density-operator propagator factorizes into an ordered product of
twelve elementary superoperator exponentials; factor_exponents evaluates
every exponent.  The diagonal exponents m_i, p_i enter all downstream
formulas only through exp(m_i), exp(p_i), so the exponentials themselves are
stored and no complex-logarithm branch tracking is needed.

Pure functions over frozen values; safe for unsynchronized concurrent use.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .coefficients import EffectiveDetunings, LabCoefficients
from .errors import FactorizationSingular

__all__ = [
    "PropagatorConstants",
    "AuxFunctions",
    "FactorizationExponents",
    "constants",
    "aux_functions",
    "factor_exponents",
    "transfer_matrix",
    "amplitude_map",
]

#: |r t| below which sinh(rt)/(rt) switches to its Taylor series.
SINHC_SMALL_ARG = 1e-4

#: |f1| below which the ordered factorization is declared singular.
F1_SINGULAR = 1e-12


@dataclass(frozen=True)
class PropagatorConstants:
    """Constants of the amplitude flow: c, r, R = k_m + i omega_m."""

    c: complex
    r: complex
    R: complex
    k_m: float
    omega_m: float


@dataclass(frozen=True)
class AuxFunctions:
    """Entries of the unimodular transfer matrix [[f1, l1], [l2, f2]] at time t."""

    t: float
    f1: complex
    f2: complex
    l1: complex
    l2: complex


@dataclass(frozen=True)
class FactorizationExponents:
    """All twelve exponents of the ordered superoperator factorization at time t.

    Conjugate pairs (z_l, n_l, q_l, exp_p1, exp_p2) are exact by construction.
    """

    t: float
    exp_m1: complex
    exp_m2: complex
    h1: complex
    h2: complex
    z: complex
    z_l: complex
    n: complex
    n_l: complex
    q: complex
    q_l: complex
    exp_p1: complex
    exp_p2: complex


def constants(dets: EffectiveDetunings, coeffs: LabCoefficients) -> PropagatorConstants:
    """Build c, r, R from the shifted detunings and the coefficient octet.

    r is the principal square root; every consumer depends on r only through
    even functions, so the branch choice cannot leak into results.
    """
    c = 0.5 * (coeffs.k_bb - coeffs.k_aa) + 0.5j * (dets.Omega_bb - dets.Omega_aa)
    cross = (1j * dets.Omega_ba + coeffs.k_ba) * (1j * dets.Omega_ab + coeffs.k_ab)
    r = cmath.sqrt(c * c + cross)
    k_m = 0.5 * (coeffs.k_aa + coeffs.k_bb)
    omega_m = 0.5 * (dets.Omega_aa + dets.Omega_bb)
    return PropagatorConstants(c=c, r=r, R=complex(k_m, omega_m), k_m=k_m, omega_m=omega_m)


def _sinhc(z: complex) -> complex:
    """sinh(z)/z, series-evaluated near zero."""
    if abs(z) < SINHC_SMALL_ARG:
        z2 = z * z
        return 1.0 + z2 / 6.0 + z2 * z2 / 120.0
    return cmath.sinh(z) / z


def aux_functions(
    t: float,
    pc: PropagatorConstants,
    dets: EffectiveDetunings,
    coeffs: LabCoefficients,
) -> AuxFunctions:
    """Evaluate f1, f2, l1, l2 at time t >= 0.

    f1 = cosh(rt) + (c/r) sinh(rt), f2 = cosh(rt) - (c/r) sinh(rt),
    l_i = -(i Omega + k) sinh(rt)/r, written with the even combination
    sinh(rt)/r = t * sinhc(rt) so that r = 0 and r -> -r are regular.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    rt = pc.r * t
    ch = cmath.cosh(rt)
    sh_over_r = t * _sinhc(rt)
    cs = pc.c * sh_over_r
    return AuxFunctions(
        t=t,
        f1=ch + cs,
        f2=ch - cs,
        l1=-(1j * dets.Omega_ab + coeffs.k_ab) * sh_over_r,
        l2=-(1j * dets.Omega_ba + coeffs.k_ba) * sh_over_r,
    )


def factor_exponents(t: float, pc: PropagatorConstants, aux: AuxFunctions) -> FactorizationExponents:
    """Evaluate all exponents of the twelve-factor superoperator product.

    Raises:
        FactorizationSingular: |f1(t)| < 1e-12.  The fixed operator ordering
            breaks down at isolated times; evaluate at t +/- eps or fall back
            to the brute-force integrator.
    """
    if abs(aux.f1) < F1_SINGULAR:
        raise FactorizationSingular(
            f"|f1({t:g})| = {abs(aux.f1):.3e}; ordered factorization undefined here"
        )
    exp_m1 = cmath.exp(-pc.R * t) * aux.f1
    exp_m2 = cmath.exp(-2.0 * pc.R * t) / exp_m1
    growth = cmath.exp(2.0 * pc.k_m * t).real
    h1 = (abs(aux.f2) ** 2 + abs(aux.l2) ** 2) * growth - 1.0
    h2 = (abs(aux.f1) ** 2 + abs(aux.l1) ** 2) * growth - 1.0
    z = (-aux.l1 * aux.f2.conjugate() - aux.l2.conjugate() * aux.f1) * growth
    n = aux.l2 / aux.f1
    q = aux.l1 / aux.f1
    return FactorizationExponents(
        t=t,
        exp_m1=exp_m1,
        exp_m2=exp_m2,
        h1=h1,
        h2=h2,
        z=z,
        z_l=z.conjugate(),
        n=n,
        n_l=n.conjugate(),
        q=q,
        q_l=q.conjugate(),
        exp_p1=exp_m1.conjugate(),
        exp_p2=exp_m2.conjugate(),
    )


def transfer_matrix(aux: AuxFunctions) -> np.ndarray:
    """The 2x2 matrix [[f1, l1], [l2, f2]]."""
    return np.array([[aux.f1, aux.l1], [aux.l2, aux.f2]], dtype=complex)


def amplitude_map(t: float, pc: PropagatorConstants, aux: AuxFunctions) -> np.ndarray:
    """Physical amplitude map exp(-R t) [[f1, l1], [l2, f2]] at time t."""
    return cmath.exp(-pc.R * t) * transfer_matrix(aux)
