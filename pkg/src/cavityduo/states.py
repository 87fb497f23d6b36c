"""Analytic state evolution: coherent pairs, weak-coupling rates, cat states.

At zero temperature a product of coherent states stays a product of coherent
states; the amplitudes follow the linear map of the propagator module,

    v_a(t) = e^{-(k_m + i omega_m) t} (v_a f1 + v_b l1),
    v_b(t) = e^{-(k_m + i omega_m) t} (v_a l2 + v_b f2).

An entangled two-branch superposition N^{1/2}(|w,0> - e^{i phi}|0,w>) evolves
into two coherent branches B1 = (sigma_1, eps_2) and B2 = (eps_1, sigma_2)
whose cross term is weighted by the overlap ratio

    gamma(t) = e^{-i phi} |<0|w>|^2 / (<eps_1|sigma_1> <sigma_2|eps_2>),

the unique weight that preserves the trace and matches the brute-force
integrator (for real overlaps it coincides with the modulus form, and the
coherence-preservation condition |<0|w>|^2 = <eps_1|sigma_1><sigma_2|eps_2>
makes the state exactly pure).  Linear entropy of the evolved superposition:

    delta(t) = (y^2 - 1)(x^2 - y^2) / (2 y^2 (1 - x)^2),
    x = e^{-|w|^2},   y(t) = |<eps_1|sigma_1>| |<sigma_2|eps_2>|.

All functions are pure; cat_density_matrix allocates per call and shares
nothing.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .coefficients import LabCoefficients, ModelParams, effective_detunings
from .errors import DegenerateCat, WeakCouplingInvalid
from .fock import check_tail, coherent_vector
from .lindblad import DensityMatrix
from .propagator import AuxFunctions, PropagatorConstants, aux_functions, constants

__all__ = [
    "CoherentPair",
    "CatState",
    "CatComponents",
    "EntropyPoint",
    "coherent_overlap",
    "evolve_coherent_pair",
    "weak_coupling_rates",
    "evolve_coherent_weak",
    "cat_components",
    "cat_density_matrix",
    "cat_mean_amplitudes",
    "linear_entropy",
    "coherence_preservation_residual",
]

#: Documented operating range for cat amplitudes: overlaps underflow beyond.
MAX_CAT_AMPLITUDE = 4.0

#: Underflow guard for the overlap product in the entropy formula.
Y_FLOOR = 1e-300


@dataclass(frozen=True)
class CoherentPair:
    """Complex amplitudes of the two cavity modes."""

    v_a: complex
    v_b: complex

    def __post_init__(self):
        if not (cmath.isfinite(self.v_a) and cmath.isfinite(self.v_b)):
            raise ValueError("amplitudes must be finite")


@dataclass(frozen=True)
class CatState:
    """Two-branch superposition N^{1/2}(|w,0> - e^{i phi}|0,w>), |w| > 0."""

    w: complex
    phi: float = 0.0

    def __post_init__(self):
        if self.w == 0:
            raise DegenerateCat("w = 0 collapses the superposition")

    @property
    def x(self) -> float:
        """Squared branch overlap |<0|w>|^2 = e^{-|w|^2}."""
        return math.exp(-abs(self.w) ** 2)


@dataclass(frozen=True)
class CatComponents:
    """Coherent amplitudes of the two evolved branches at time t."""

    t: float
    sigma_1: complex
    sigma_2: complex
    eps_1: complex
    eps_2: complex


@dataclass(frozen=True)
class EntropyPoint:
    t: float
    x: float
    y: float
    delta: float


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """<alpha|beta> = exp(-|alpha|^2/2 - |beta|^2/2 + conj(alpha) beta)."""
    return cmath.exp(
        -0.5 * abs(alpha) ** 2 - 0.5 * abs(beta) ** 2 + alpha.conjugate() * beta
    )


def evolve_coherent_pair(
    init: CoherentPair,
    t: float,
    pc: PropagatorConstants,
    aux: AuxFunctions,
) -> CoherentPair:
    """Exact amplitudes at time t; the state stays an exact coherent product."""
    damp = cmath.exp(-(pc.k_m + 1j * pc.omega_m) * t)
    return CoherentPair(
        v_a=damp * (init.v_a * aux.f1 + init.v_b * aux.l1),
        v_b=damp * (init.v_a * aux.l2 + init.v_b * aux.f2),
    )


def weak_coupling_rates(k_aa: float, k_bb: float, g: float) -> tuple[float, float]:
    """Split rates k_+ = k_aa + g^2/dk, k_- = k_bb - g^2/dk with dk = k_bb - k_aa.

    Valid for g << dk; the hard threshold g < dk/2 is an engineering choice,
    not physics.  The sum rule k_+ + k_- = k_aa + k_bb holds identically.
    """
    dk = k_bb - k_aa
    if dk <= 0:
        raise WeakCouplingInvalid(f"needs k_bb > k_aa, got dk = {dk:g}")
    if g >= 0.5 * dk:
        raise WeakCouplingInvalid(
            f"g = {g:g} is not small against dk = {dk:g} (require g < dk/2); "
            f"validity ratio g/dk = {g / dk:.3f}"
        )
    shift = g * g / dk
    return k_aa + shift, k_bb - shift


def evolve_coherent_weak(
    init: CoherentPair,
    t: float,
    omega: float,
    k_aa: float,
    k_bb: float,
    g: float,
) -> CoherentPair:
    """Weak-coupling approximation for degenerate modes with split rates k_+-.

    v_a(t) = e^{-i omega t} { e^{-k_+ t} v_a + (i g/dk)(e^{-k_- t} - e^{-k_+ t}) v_b }
    and symmetrically for v_b.  Accurate to O((g/dk)^2) relative against the
    exact map.
    """
    k_plus, k_minus = weak_coupling_rates(k_aa, k_bb, g)
    dk = k_bb - k_aa
    rot = cmath.exp(-1j * omega * t)
    slow = math.exp(-k_plus * t)
    fast = math.exp(-k_minus * t)
    feed = (1j * g / dk) * (fast - slow)
    return CoherentPair(
        v_a=rot * (slow * init.v_a + feed * init.v_b),
        v_b=rot * (fast * init.v_b + feed * init.v_a),
    )


def cat_components(
    cat: CatState,
    t: float,
    pc: PropagatorConstants,
    aux: AuxFunctions,
) -> CatComponents:
    """Branch amplitudes sigma_i = damp * f_i * w, eps_i = damp * l_i * w."""
    damp = cmath.exp(-(pc.k_m + 1j * pc.omega_m) * t)
    w = complex(cat.w)
    return CatComponents(
        t=t,
        sigma_1=damp * aux.f1 * w,
        sigma_2=damp * aux.f2 * w,
        eps_1=damp * aux.l1 * w,
        eps_2=damp * aux.l2 * w,
    )


def _branch_overlap(comps: CatComponents) -> complex:
    """<B2|B1> = <eps_1|sigma_1> <sigma_2|eps_2> for B1=(sigma_1,eps_2), B2=(eps_1,sigma_2)."""
    return coherent_overlap(comps.eps_1, comps.sigma_1) * coherent_overlap(
        comps.sigma_2, comps.eps_2
    )


def cat_density_matrix(
    cat: CatState,
    comps: CatComponents,
    dim_a: int,
    dim_b: int,
) -> tuple[DensityMatrix, float]:
    """Project the evolved two-branch state onto the truncated Fock basis.

    Returns the trace-renormalized matrix together with the renormalization
    magnitude |trace - 1| of the projected (pre-normalization) matrix, which
    bounds the truncation loss.

    Raises:
        CutoffTooSmall: a branch amplitude's discarded tail exceeds the budget.
    """
    for amp, dim, label in (
        (comps.sigma_1, dim_a, "sigma_1"),
        (comps.eps_1, dim_a, "eps_1"),
        (comps.sigma_2, dim_b, "sigma_2"),
        (comps.eps_2, dim_b, "eps_2"),
    ):
        check_tail(amp, dim, f"cat branch {label}")
    b1 = np.kron(coherent_vector(comps.sigma_1, dim_a), coherent_vector(comps.eps_2, dim_b))
    b2 = np.kron(coherent_vector(comps.eps_1, dim_a), coherent_vector(comps.sigma_2, dim_b))
    x = cat.x
    norm = 1.0 / (2.0 - 2.0 * x * math.cos(cat.phi))
    gamma = cmath.exp(-1j * cat.phi) * x / _branch_overlap(comps)
    raw = norm * (
        np.outer(b1, b1.conj())
        + np.outer(b2, b2.conj())
        - gamma * np.outer(b1, b2.conj())
        - np.conj(gamma) * np.outer(b2, b1.conj())
    )
    trace = float(np.trace(raw).real)
    return DensityMatrix(dim_a, dim_b, raw / trace), abs(trace - 1.0)


def cat_mean_amplitudes(cat: CatState, comps: CatComponents) -> tuple[complex, complex]:
    """Exact <a>, <b> of the evolved superposition (overlap algebra, no cutoff)."""
    x = cat.x
    norm = 1.0 / (2.0 - 2.0 * x * math.cos(cat.phi))
    wplus = 1.0 - cmath.exp(-1j * cat.phi) * x
    wminus = 1.0 - cmath.exp(1j * cat.phi) * x
    mean_a = norm * (comps.sigma_1 * wplus + comps.eps_1 * wminus)
    mean_b = norm * (comps.eps_2 * wplus + comps.sigma_2 * wminus)
    return mean_a, mean_b


def linear_entropy(cat: CatState, comps: CatComponents) -> EntropyPoint:
    """Linear entropy delta = Tr(rho - rho^2) of the evolved superposition."""
    x = cat.x
    y = abs(coherent_overlap(comps.eps_1, comps.sigma_1)) * abs(
        coherent_overlap(comps.sigma_2, comps.eps_2)
    )
    y = max(y, Y_FLOOR)
    delta = (y * y - 1.0) * (x * x - y * y) / (2.0 * y * y * (1.0 - x) ** 2)
    if delta <= 0.0:
        if delta < -1e-9:
            raise ValueError(
                f"delta = {delta:.3e} < 0: branch separation grew, the "
                "coefficient octet is unphysical (see the damping screen)"
            )
        delta = 0.0
    return EntropyPoint(t=comps.t, x=x, y=y, delta=delta)


def coherence_preservation_residual(cat: CatState, comps: CatComponents) -> float:
    """|x - <eps_1|sigma_1><sigma_2|eps_2>|; zero means unitary-like cross terms."""
    return abs(cat.x - _branch_overlap(comps))


def exact_engine(params: ModelParams, coeffs: LabCoefficients):
    """Convenience: (detunings, constants) pair for repeated evaluations."""
    dets = effective_detunings(params, coeffs)
    return dets, constants(dets, coeffs)


def amplitudes_at(
    params: ModelParams,
    coeffs: LabCoefficients,
    init: CoherentPair,
    t: float,
) -> CoherentPair:
    """One-shot exact amplitude evolution (builds the propagator internally)."""
    dets, pc = exact_engine(params, coeffs)
    return evolve_coherent_pair(init, t, pc, aux_functions(t, pc, dets, coeffs))
