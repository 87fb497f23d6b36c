"""Normal-mode data and laboratory-frame master-equation coefficients.

Two cavity modes with frequencies omega_a, omega_b and direct coupling g
diagonalize into normal modes at

    omega_{1,2} = [(omega_a + omega_b) +/- sqrt((omega_a - omega_b)^2 + 4 g^2)] / 2

with mixing angle theta.  A shared reservoir, described by a sampled mode
density D(omega) and complex couplings alpha(omega), beta(omega), then induces
eight real constants: four damping/cross-damping rates k_xy and four frequency
shifts Delta_xy (x, y in {a, b}).  Each pair is the real/imaginary split of a
frequency integral over the sampled spectrum weighted by the windowed kernel

    xi_j(omega) = integral_0^tau_c exp(i (omega - omega_j) tau) d tau.

Everything here is a pure function over immutable values; concurrent use
needs no coordination.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GridTooCoarse, NegativeDiagonalRate, PhysicalityWarning

__all__ = [
    "ModelParams",
    "NormalModeData",
    "ReservoirSpectrum",
    "LabCoefficients",
    "EffectiveDetunings",
    "normal_modes",
    "xi",
    "coefficients_from_spectrum",
    "effective_detunings",
    "gamma_matrix",
    "physicality_screen",
]

#: |(omega - omega_j) * tau_c| below which xi switches to its Taylor series.
XI_SMALL_ARG = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """Bare mode frequencies and direct coupling strength (rad/time)."""

    omega_a: float
    omega_b: float
    g: float

    def __post_init__(self):
        if not (math.isfinite(self.omega_a) and self.omega_a > 0):
            raise ValueError(f"omega_a must be finite and > 0, got {self.omega_a}")
        if not (math.isfinite(self.omega_b) and self.omega_b > 0):
            raise ValueError(f"omega_b must be finite and > 0, got {self.omega_b}")
        if not (math.isfinite(self.g) and self.g >= 0):
            raise ValueError(f"g must be finite and >= 0, got {self.g}")


@dataclass(frozen=True)
class NormalModeData:
    """Normal-mode frequencies (omega_1 >= omega_2) and mixing angle cos/sin."""

    omega_1: float
    omega_2: float
    cos_theta: float
    sin_theta: float


@dataclass(frozen=True)
class LabCoefficients:
    """The eight laboratory-frame constants: rates k_xy and shifts Delta_xy."""

    k_aa: float
    k_ab: float
    k_ba: float
    k_bb: float
    d_aa: float
    d_ab: float
    d_ba: float
    d_bb: float

    def __post_init__(self):
        for name in ("k_aa", "k_ab", "k_ba", "k_bb", "d_aa", "d_ab", "d_ba", "d_bb"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")


@dataclass(frozen=True)
class EffectiveDetunings:
    """Reservoir-shifted frequencies and couplings entering the propagator."""

    Omega_aa: float
    Omega_bb: float
    Omega_ab: float
    Omega_ba: float


@dataclass(frozen=True)
class ReservoirSpectrum:
    """Sampled reservoir data: mode density and couplings on a frequency grid.

    ``grid`` must be strictly increasing with at least two points, ``density``
    nonnegative, and ``tau_c`` (the correlation-window length) positive.
    Values between samples are taken as linear interpolants.
    """

    grid: np.ndarray
    density: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    tau_c: float

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        density = np.asarray(self.density, dtype=float)
        alpha = np.asarray(self.alpha, dtype=complex)
        beta = np.asarray(self.beta, dtype=complex)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", density)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid needs at least two sample frequencies")
        if not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly increasing")
        for name, arr in (("density", density), ("alpha", alpha), ("beta", beta)):
            if arr.shape != grid.shape:
                raise ValueError(f"{name} must match the grid shape")
        if np.any(density < 0):
            raise ValueError("density must be nonnegative")
        if not (math.isfinite(self.tau_c) and self.tau_c > 0):
            raise ValueError(f"tau_c must be finite and > 0, got {self.tau_c}")

    def refined(self) -> "ReservoirSpectrum":
        """Spectrum with linearly interpolated midpoints inserted (grid doubled)."""
        def interleave(values):
            mid = 0.5 * (values[:-1] + values[1:])
            out = np.empty(values.size + mid.size, dtype=values.dtype)
            out[0::2] = values
            out[1::2] = mid
            return out

        return ReservoirSpectrum(
            grid=interleave(self.grid),
            density=interleave(self.density),
            alpha=interleave(self.alpha),
            beta=interleave(self.beta),
            tau_c=self.tau_c,
        )

    @classmethod
    def from_csv(cls, path, tau_c: float) -> "ReservoirSpectrum":
        """Load a spectrum from CSV with header omega,D,re_alpha,im_alpha,re_beta,im_beta."""
        expected = ["omega", "D", "re_alpha", "im_alpha", "re_beta", "im_beta"]
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != expected:
                raise ValueError(f"spectrum CSV header must be {','.join(expected)}")
            for row in reader:
                if not row:
                    continue
                rows.append([float(v) for v in row])
        data = np.asarray(rows, dtype=float)
        if data.ndim != 2 or data.shape[0] < 2:
            raise ValueError("spectrum CSV needs at least two rows")
        return cls(
            grid=data[:, 0],
            density=data[:, 1],
            alpha=data[:, 2] + 1j * data[:, 3],
            beta=data[:, 4] + 1j * data[:, 5],
            tau_c=tau_c,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["omega", "D", "re_alpha", "im_alpha", "re_beta", "im_beta"])
            for i in range(self.grid.size):
                writer.writerow([
                    f"{self.grid[i]:.17g}",
                    f"{self.density[i]:.17g}",
                    f"{self.alpha[i].real:.17g}",
                    f"{self.alpha[i].imag:.17g}",
                    f"{self.beta[i].real:.17g}",
                    f"{self.beta[i].imag:.17g}",
                ])


def normal_modes(params: ModelParams) -> NormalModeData:
    """Diagonalize the 2x2 mode matrix [[omega_a, g], [g, omega_b]].

    For the fully degenerate case (omega_a == omega_b and g == 0) the mixing
    angle is arbitrary; theta = 0 is returned.
    """
    delta = params.omega_a - params.omega_b
    disc = math.hypot(delta, 2.0 * params.g)
    mean2 = params.omega_a + params.omega_b
    omega_1 = 0.5 * (mean2 + disc)
    omega_2 = 0.5 * (mean2 - disc)
    if disc == 0.0:
        cos_theta, sin_theta = 1.0, 0.0
    else:
        cos_theta = math.sqrt(0.5 * (1.0 + delta / disc))
        sin_theta = math.sqrt(0.5 * (1.0 - delta / disc))
    return NormalModeData(omega_1, omega_2, cos_theta, sin_theta)


def xi(omega, omega_j: float, tau_c: float):
    """Windowed kernel integral_0^tau_c exp(i (omega - omega_j) tau) d tau.

    Equals (exp(i x tau_c) - 1) / (i x) with x = omega - omega_j; a three-term
    Taylor series is used for |x tau_c| < 1e-6 to avoid cancellation.  Accepts
    a scalar or an array of frequencies.
    """
    if tau_c < 0:
        raise ValueError("tau_c must be >= 0")
    x = np.asarray(omega, dtype=float) - omega_j
    arg = x * tau_c
    small = np.abs(arg) < XI_SMALL_ARG
    safe = np.where(small, 1.0, x)
    series = tau_c * (1.0 + 0.5j * arg - arg * arg / 6.0)
    closed = (np.exp(1j * arg) - 1.0) / (1j * safe)
    out = np.where(small, series, closed)
    if np.isscalar(omega) or np.ndim(omega) == 0:
        return complex(out)
    return out


def _integral_octet(spectrum: ReservoirSpectrum, nm: NormalModeData):
    """Trapezoid values of the four complex coefficient integrals K_xy."""
    xs = spectrum.grid
    d = spectrum.density
    al = spectrum.alpha
    be = spectrum.beta
    xi1 = xi(xs, nm.omega_1, spectrum.tau_c)
    xi2 = xi(xs, nm.omega_2, spectrum.tau_c)
    c2 = nm.cos_theta * nm.cos_theta
    s2 = nm.sin_theta * nm.sin_theta
    sc = nm.sin_theta * nm.cos_theta
    eta = xi1 * c2 + xi2 * s2
    mu = xi2 * c2 + xi1 * s2
    nu = (xi1 - xi2) * sc
    aa2 = d * (al * np.conj(al))
    ab2 = d * (al * np.conj(be))
    ba2 = d * (be * np.conj(al))
    bb2 = d * (be * np.conj(be))
    k_aa = np.trapezoid(aa2 * eta + ab2 * nu, xs)
    k_ab = np.trapezoid(aa2 * nu + ab2 * mu, xs)
    k_ba = np.trapezoid(ba2 * eta + bb2 * nu, xs)
    k_bb = np.trapezoid(ba2 * nu + bb2 * mu, xs)
    return np.array([k_aa, k_ab, k_ba, k_bb], dtype=complex)


def coefficients_from_spectrum(
    spectrum: ReservoirSpectrum,
    nm: NormalModeData,
    *,
    grid_rtol: float = 1e-6,
    rate_tol: float | None = None,
) -> LabCoefficients:
    """Evaluate the four coefficient integrals k_xy + i*Delta_xy by quadrature.

    The composite trapezoid value is compared against one midpoint refinement
    of the sampled grid; if any coefficient moves by more than ``grid_rtol``
    relative to the largest coefficient magnitude, the grid is declared too
    coarse.  The refined values are returned.

    Raises:
        GridTooCoarse: refinement changed a coefficient beyond ``grid_rtol``.
        NegativeDiagonalRate: k_aa or k_bb is negative beyond ``rate_tol``.
    """
    if spectrum.grid[0] > nm.omega_2 or spectrum.grid[-1] < nm.omega_1:
        raise ValueError(
            "spectrum grid must cover both normal-mode frequencies "
            f"[{nm.omega_2:g}, {nm.omega_1:g}]"
        )
    base = _integral_octet(spectrum, nm)
    fine = _integral_octet(spectrum.refined(), nm)
    scale = max(np.max(np.abs(fine)), 1e-300)
    drift = np.max(np.abs(fine - base)) / scale
    if drift > grid_rtol:
        raise GridTooCoarse(
            f"refining the grid moved a coefficient by {drift:.3e} relative "
            f"(tolerance {grid_rtol:.3e}); supply a denser spectrum"
        )
    if rate_tol is None:
        rate_tol = max(1e-12, grid_rtol * scale)
    k_aa, k_bb = fine[0].real, fine[3].real
    if k_aa < -rate_tol or k_bb < -rate_tol:
        raise NegativeDiagonalRate(
            f"diagonal rates k_aa={k_aa:.6e}, k_bb={k_bb:.6e} "
            f"(tolerance {rate_tol:.3e}); spectral data is unphysical"
        )
    return LabCoefficients(
        k_aa=k_aa,
        k_ab=fine[1].real,
        k_ba=fine[2].real,
        k_bb=k_bb,
        d_aa=fine[0].imag,
        d_ab=fine[1].imag,
        d_ba=fine[2].imag,
        d_bb=fine[3].imag,
    )


def effective_detunings(params: ModelParams, coeffs: LabCoefficients) -> EffectiveDetunings:
    """Apply the four shift definitions Omega_xy = (omega_x or g) - Delta_xy."""
    return EffectiveDetunings(
        Omega_aa=params.omega_a - coeffs.d_aa,
        Omega_bb=params.omega_b - coeffs.d_bb,
        Omega_ab=params.g - coeffs.d_ab,
        Omega_ba=params.g - coeffs.d_ba,
    )


def gamma_matrix(coeffs: LabCoefficients) -> np.ndarray:
    """Hermitian 2x2 damping matrix whose quadratic form drains <n_a + n_b>."""
    off = (coeffs.k_ab + coeffs.k_ba) + 1j * (coeffs.d_ab - coeffs.d_ba)
    return np.array(
        [[2.0 * coeffs.k_aa, off], [np.conj(off), 2.0 * coeffs.k_bb]], dtype=complex
    )


def physicality_screen(coeffs: LabCoefficients, *, warn: bool = True) -> float:
    """Return the minimum eigenvalue of the damping matrix; warn if negative.

    A negative value means the coefficient octet does not damp every mode
    combination and evolved states may lose positivity.  This is a warning,
    not an error: the brute-force integrator monitors positivity at runtime.
    """
    eigs = np.linalg.eigvalsh(gamma_matrix(coeffs))
    min_eig = float(eigs[0])
    tol = 1e-12 * max(1.0, float(abs(eigs[-1])))
    if min_eig < -tol and warn:
        warnings.warn(
            f"damping matrix is not positive semidefinite (min eigenvalue "
            f"{min_eig:.6e}); dynamics may be unphysical",
            PhysicalityWarning,
            stacklevel=2,
        )
    return min_eig
