"""Negative local energy density from vacuum/two-photon interference.

Superposing the vacuum with a two-photon wave packet drives the mean energy
density below zero wherever the off-diagonal element <0|eps(x)|2> is nonzero.
The Wick route reduces both matrix elements to two complex mode amplitudes
(the electric and magnetic packet profiles at the point); a truncated Fock
matrix oracle on the same discretized modes checks every contraction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .fields import _unit, _vec3


@dataclass(frozen=True)
class SuperpositionParams:
    theta: float  # in [0, pi]
    delta: float  # in [0, 2 pi)

    def __post_init__(self):
        if not (0.0 <= self.theta <= np.pi):
            raise ValidationError("theta must lie in [0, pi]")
        if not (0.0 <= self.delta < 2.0 * np.pi):
            raise ValidationError("delta must lie in [0, 2 pi)")


@dataclass(frozen=True)
class GaussianPhotonMode:
    """Normalized transverse wave-packet mode F(k) = N i (k x axis) e^{-sigma^2 k^2/2} e^{-ik.c}."""

    sigma: float
    center: tuple = (0.0, 0.0, 0.0)
    axis: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not (self.sigma > 0.0):
            raise ValidationError("sigma must be positive")
        object.__setattr__(self, "axis", tuple(_unit(self.axis, "axis")))
        object.__setattr__(self, "center", tuple(_vec3(self.center, "center")))

    @property
    def normalization(self) -> float:
        # int |F|^2 d^3k = N^2 (8 pi/3) int k^4 e^{-sigma^2 k^2} dk = N^2 pi^{3/2} / sigma^5
        return self.sigma**2.5 / np.pi**0.75

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        kk = np.sum(k * k, axis=-1)
        envelope = self.normalization * np.exp(-0.5 * self.sigma**2 * kk)
        phase = np.exp(-1j * (k @ np.asarray(self.center)))
        return (1j * envelope * phase)[..., None] * np.cross(k, np.asarray(self.axis))

    def norm_check(self, n: int = 96, k_max: float | None = None) -> float:
        """Grid value of int |F|^2 d^3k (should be 1)."""
        k_max = k_max or 8.0 / self.sigma
        ax = np.linspace(-k_max, k_max, n, endpoint=False) + k_max / n
        kx, ky, kz = np.meshgrid(ax, ax, ax, indexing="ij")
        kvec = np.stack([kx, ky, kz], axis=-1)
        vals = self(kvec)
        dk = ax[1] - ax[0]
        return float(np.sum(np.abs(vals) ** 2)) * dk**3


def packet_amplitudes(mode: GaussianPhotonMode, x, n: int = 96, k_max: float | None = None):
    """Electric and magnetic single-photon amplitudes (uE, uB) at points x.

    uE(x) = int d^3k (-i) sqrt(|k|/(2 (2pi)^3)) F(k) e^{ik.x}
    uB(x) = int d^3k (i k x F(k)) / sqrt(2 (2pi)^3 |k|) e^{ik.x}
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x.reshape(-1, 3)
    k_max = k_max or 8.0 / mode.sigma
    ax = np.linspace(-k_max, k_max, n, endpoint=False) + k_max / n
    kx, ky, kz = np.meshgrid(ax, ax, ax, indexing="ij")
    kvec = np.stack([kx, ky, kz], axis=-1)
    kmag = np.sqrt(np.sum(kvec * kvec, axis=-1))
    dk = ax[1] - ax[0]

    F = mode(kvec)
    safe = np.where(kmag > 0.0, kmag, 1.0)
    eAmp = -1j * np.sqrt(kmag / (2.0 * (2.0 * np.pi) ** 3))[..., None] * F
    bAmp = 1j * np.cross(kvec, F) / np.sqrt(2.0 * (2.0 * np.pi) ** 3 * safe)[..., None]
    bAmp[kmag == 0.0] = 0.0

    uE = np.empty((len(pts), 3), dtype=complex)
    uB = np.empty((len(pts), 3), dtype=complex)
    for i, p in enumerate(pts):
        phase = np.exp(1j * (kvec @ p))
        uE[i] = np.sum(eAmp * phase[..., None], axis=(0, 1, 2)) * dk**3
        uB[i] = np.sum(bAmp * phase[..., None], axis=(0, 1, 2)) * dk**3
    if single:
        return uE[0], uB[0]
    return uE, uB


def matrix_elements_from_amplitudes(uE, uB) -> tuple[float, complex]:
    """Wick contractions of the normal-ordered quadratic density.

    With u = sum_j c_j (mode amplitude at x):
    A = <2|eps|2> = 2(|uE|^2 + |uB|^2)       (nonnegative)
    B = <0|eps|2> = (uE.uE + uB.uB)/sqrt(2)  (complex bilinear squares)
    """
    uE = np.asarray(uE)
    uB = np.asarray(uB)
    A = 2.0 * float(np.sum(np.abs(uE) ** 2 + np.abs(uB) ** 2, axis=-1))
    B = complex((np.sum(uE * uE, axis=-1) + np.sum(uB * uB, axis=-1)) / math.sqrt(2.0))
    return A, B


def two_photon_matrix_elements(mode: GaussianPhotonMode, x, n: int = 96) -> tuple[float, complex]:
    """(A, B) = (<2|eps(x)|2>, <0|eps(x)|2>) for two photons in one packet mode."""
    norm = mode.norm_check(n=64)
    if abs(norm - 1.0) > 1e-6:
        raise ValidationError(f"mode is not normalized: int |F|^2 = {norm:.8f}")
    uE, uB = packet_amplitudes(mode, x, n=n)
    return matrix_elements_from_amplitudes(uE, uB)


def optimal_superposition(A: float, B: complex) -> tuple[SuperpositionParams, float]:
    """Superposition parameters minimizing the local mean energy density.

    eps_min = -(1/2)[sqrt(A^2 + 4|B|^2) - A] < 0 whenever B != 0.  The branch
    of tan(delta) = -Im B / Re B is chosen so cos(delta) Re B - sin(delta) Im B
    = +|B|, and theta in (pi/2, pi] makes the interference term maximally
    negative; substituting the returned angles back into the objective
    reproduces eps_min exactly.
    """
    A = float(A)
    B = complex(B)
    if A < 0.0:
        raise ValidationError("diagonal element must be nonnegative")
    magB = abs(B)
    if A == 0.0 and magB == 0.0:
        raise ValidationError("optimum undefined for A = B = 0")
    root = math.hypot(A, 2.0 * magB)
    eps_min = -0.5 * (root - A)
    delta = math.atan2(-B.imag, B.real) % (2.0 * np.pi) if magB > 0.0 else 0.0
    if delta >= 2.0 * np.pi:  # tiny negative angles round up to exactly 2 pi
        delta = 0.0
    theta = np.pi - 0.5 * math.atan2(2.0 * magB, A)
    return SuperpositionParams(theta=float(theta), delta=float(delta)), float(eps_min)


def superposition_energy(A: float, B: complex, params: SuperpositionParams) -> float:
    """Mean density 2 cos(t)sin(t)[cos(d) Re B - sin(d) Im B] + sin^2(t) A."""
    ct, st = math.cos(params.theta), math.sin(params.theta)
    cross = math.cos(params.delta) * B.real - math.sin(params.delta) * B.imag
    return 2.0 * ct * st * cross + st * st * float(A)


@dataclass(frozen=True)
class PlaneWaveMode:
    """One discretized transverse mode: wavevector, polarization, quantization volume."""

    k: tuple
    polarization: tuple
    volume: float = 1.0

    def __post_init__(self):
        k = _vec3(self.k, "k")
        pol = _unit(self.polarization, "polarization")
        if np.linalg.norm(k) == 0.0:
            raise ValidationError("mode wavevector must be nonzero")
        if abs(k @ pol) > 1e-12 * np.linalg.norm(k):
            raise ValidationError("polarization must be transverse to k")
        if self.volume <= 0.0:
            raise ValidationError("quantization volume must be positive")
        object.__setattr__(self, "k", tuple(k))
        object.__setattr__(self, "polarization", tuple(pol))

    @property
    def omega(self) -> float:
        return float(np.linalg.norm(self.k))

    def electric_amplitude(self, x) -> np.ndarray:
        """Coefficient of the annihilator in E(x) for this mode."""
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * (np.asarray(self.k) @ x))
        return -1j * math.sqrt(self.omega / (2.0 * self.volume)) * phase * np.asarray(self.polarization)

    def magnetic_amplitude(self, x) -> np.ndarray:
        """Coefficient of the annihilator in curl A(x) for this mode."""
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * (np.asarray(self.k) @ x))
        return (
            1j
            * phase
            / math.sqrt(2.0 * self.omega * self.volume)
            * np.cross(np.asarray(self.k), np.asarray(self.polarization))
        )


@dataclass(frozen=True)
class DiscreteModeSet:
    """A two-photon state over <= 3 discrete modes with coefficients c_j, sum |c_j|^2 = 1."""

    modes: tuple
    coeffs: tuple

    def __post_init__(self):
        if len(self.modes) != len(self.coeffs):
            raise ValidationError("one coefficient per mode required")
        if not (1 <= len(self.modes) <= 3):
            raise ValidationError("1 to 3 modes supported (basis overflow above)")
        c = np.asarray(self.coeffs, dtype=complex)
        norm = float(np.sum(np.abs(c) ** 2))
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"coefficients not normalized: sum |c|^2 = {norm}")

    def wick_matrix_elements(self, x) -> tuple[float, complex]:
        uE = sum(c * m.electric_amplitude(x) for c, m in zip(self.coeffs, self.modes))
        uB = sum(c * m.magnetic_amplitude(x) for c, m in zip(self.coeffs, self.modes))
        return matrix_elements_from_amplitudes(uE, uB)


class FockSpace:
    """Dense operators on the total-occupation-truncated Fock space of a few modes."""

    def __init__(self, num_modes: int, cutoff: int):
        if num_modes < 1 or num_modes > 3:
            raise ValidationError("1 to 3 modes supported (basis overflow above)")
        self.num_modes = num_modes
        self.cutoff = cutoff
        self.basis = [
            occ
            for occ in itertools.product(range(cutoff + 1), repeat=num_modes)
            if sum(occ) <= cutoff
        ]
        self.index = {occ: i for i, occ in enumerate(self.basis)}
        self.dim = len(self.basis)

    def annihilator(self, j: int) -> np.ndarray:
        a = np.zeros((self.dim, self.dim))
        for occ, col in self.index.items():
            if occ[j] == 0:
                continue
            lowered = list(occ)
            lowered[j] -= 1
            a[self.index[tuple(lowered)], col] = math.sqrt(occ[j])
        return a

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim)
        v[self.index[(0,) * self.num_modes]] = 1.0
        return v


def _normal_ordered_quadratic(amps: list[np.ndarray], ops: list[np.ndarray], dim: int) -> np.ndarray:
    """sum_ab : (sum_j amp_j a_j + h.c.)_a (same)_a : as a dense matrix."""
    total = np.zeros((dim, dim), dtype=complex)
    for j1, a1 in enumerate(ops):
        for j2, a2 in enumerate(ops):
            dot_pp = complex(np.sum(amps[j1] * amps[j2]))  # a a
            dot_pm = complex(np.sum(np.conj(amps[j1]) * amps[j2]))  # a† a
            dot_mm = complex(np.sum(np.conj(amps[j1]) * np.conj(amps[j2])))  # a† a†
            total += dot_pp * (a1 @ a2)
            total += 2.0 * dot_pm * (a1.conj().T @ a2)
            total += dot_mm * (a1.conj().T @ a2.conj().T)
    return total


def fock_matrix_elements(modeset: DiscreteModeSet, x, cutoff: int = 2) -> tuple[float, complex]:
    """(A, B) read off an explicit matrix for the normal-ordered density.

    Exact for cutoff >= 2: the annihilation parts of the normal-ordered
    quadratic act first, so no truncated intermediate state contributes.
    """
    if cutoff < 2:
        raise ValidationError("cutoff must be at least 2 to hold the two-photon state")
    space = FockSpace(len(modeset.modes), cutoff)
    ops = [space.annihilator(j) for j in range(space.num_modes)]
    x = np.asarray(x, dtype=float)

    eAmps = [np.asarray(m.electric_amplitude(x)) for m in modeset.modes]
    bAmps = [np.asarray(m.magnetic_amplitude(x)) for m in modeset.modes]
    eps_op = 0.5 * (
        _normal_ordered_quadratic(eAmps, ops, space.dim)
        + _normal_ordered_quadratic(bAmps, ops, space.dim)
    )

    creator = sum(c * op.conj().T for c, op in zip(modeset.coeffs, ops))
    vac = space.vacuum().astype(complex)
    two = creator @ (creator @ vac) / math.sqrt(2.0)
    A = float(np.real(two.conj() @ (eps_op @ two)))
    B = complex(vac.conj() @ (eps_op @ two))
    return A, B


def vacuum_probe_functional_moments(couplings, cutoff: int = 12) -> tuple[float, float]:
    """Vacuum expectations of cos(2 G) and sin(2 G) for the discretized measured functional.

    G = pi/4 - X with X = sum_j (g_j a_j + conj(g_j) a_j†).  The cosine pairing
    cancels exactly (two opposite coherent overlaps), while the sine pairing is
    the positive vacuum overlap exp(-2 sum |g_j|^2) in the untruncated limit.
    """
    couplings = np.atleast_1d(np.asarray(couplings, dtype=complex))
    space = FockSpace(len(couplings), cutoff)
    X = np.zeros((space.dim, space.dim), dtype=complex)
    for j, g in enumerate(couplings):
        a = space.annihilator(j).astype(complex)
        X += g * a + np.conj(g) * a.conj().T
    two_g = np.pi / 2.0 * np.eye(space.dim) - 2.0 * X
    evals, evecs = np.linalg.eigh(two_g)
    vac = space.vacuum().astype(complex)
    w = evecs.conj().T @ vac
    cos_val = float(np.real(np.sum(np.abs(w) ** 2 * np.cos(evals))))
    sin_val = float(np.real(np.sum(np.abs(w) ** 2 * np.sin(evals))))
    return cos_val, sin_val


def demo_rows(mode: GaussianPhotonMode, xs, n: int = 64) -> np.ndarray:
    """(x, y, z, A, Re B, Im B, eps_min) rows along the given points."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    uE, uB = packet_amplitudes(mode, xs, n=n)
    rows = []
    for p, ue, ub in zip(xs, uE, uB):
        A, B = matrix_elements_from_amplitudes(ue, ub)
        if A == 0.0 and B == 0.0:
            eps_min = 0.0
        else:
            _, eps_min = optimal_superposition(A, B)
        rows.append([p[0], p[1], p[2], A, B.real, B.imag, eps_min])
    return np.asarray(rows)
