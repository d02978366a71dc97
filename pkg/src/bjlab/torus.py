"""Matrix-valued trigonometric polynomials on the torus and its complex annulus.

A phase ``x`` on the torus is identified with the point ``e(x) = exp(2 pi i x)``
of the unit circle, so a polynomial ``sum_k c_k e(k x)`` extends to the annulus
as the Laurent polynomial ``sum_k c_k z**k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DomainError

REALITY_TOL = 1e-12


def e(x):
    """``exp(2 pi i x)``."""
    return np.exp(2j * np.pi * np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class TrigMatrixPoly:
    """Finite Fourier series ``x -> sum_{|k| <= d} coeffs[k + d] e(k x)`` of l x l matrices.

    ``coeffs`` has shape ``(2 d + 1, l, l)``.  The reality constraint
    ``c_{-k} = conj(c_k)`` is checked on construction, so values on the real
    torus are real matrices.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[0] % 2 != 1:
            raise DomainError(f"coefficient array must have shape (2d+1, l, l), got {c.shape}")
        scale = 1.0 + np.abs(c).max(initial=0.0)
        defect = np.abs(c - np.conj(c[::-1])).max(initial=0.0)
        if defect > REALITY_TOL * scale:
            raise DomainError(f"coefficients violate c(-k) = conj(c(k)) (defect {defect:.2e})")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction -----------------------------------------------------------

    @classmethod
    def from_modes(cls, modes: Mapping[int, np.ndarray], l: int | None = None) -> "TrigMatrixPoly":
        if not modes:
            if l is None:
                raise DomainError("need l for an empty mode table")
            return cls(np.zeros((1, l, l)))
        mats = {int(k): np.atleast_2d(np.asarray(v, dtype=complex)) for k, v in modes.items()}
        l = l or next(iter(mats.values())).shape[0]
        d = max(abs(k) for k in mats)
        c = np.zeros((2 * d + 1, l, l), dtype=complex)
        for k, m in mats.items():
            if m.shape != (l, l):
                raise DomainError(f"mode {k} has shape {m.shape}, expected {(l, l)}")
            c[k + d] = m
        return cls(c)

    @classmethod
    def constant(cls, mat) -> "TrigMatrixPoly":
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        return cls(mat[None].astype(complex))

    @classmethod
    def zeros(cls, l: int) -> "TrigMatrixPoly":
        return cls(np.zeros((1, l, l)))

    @classmethod
    def cosine(cls, amplitude, shift: float = 0.0) -> "TrigMatrixPoly":
        """``amplitude * 2 cos(2 pi (x + shift))``."""
        a = np.atleast_2d(np.asarray(amplitude, dtype=float))
        ph = np.exp(2j * np.pi * shift)
        return cls(np.stack([a * np.conj(ph), np.zeros_like(a), a * ph]).astype(complex))

    @classmethod
    def from_table(cls, rows: Iterable, l: int) -> "TrigMatrixPoly":
        """Build from ``(k, row, col, re, im)`` tuples with 0-based row/col."""
        modes: dict[int, np.ndarray] = {}
        seen = set()
        for entry in rows:
            if len(entry) != 5:
                raise DomainError(f"Fourier entry {entry!r} is not (k, row, col, re, im)")
            k, i, j, re, im = entry
            k, i, j = int(k), int(i), int(j)
            if not (0 <= i < l and 0 <= j < l):
                raise DomainError(f"Fourier entry {entry!r}: row/col out of range for l={l}")
            if (k, i, j) in seen:
                raise DomainError(f"duplicate Fourier entry for (k, row, col) = {(k, i, j)}")
            seen.add((k, i, j))
            modes.setdefault(k, np.zeros((l, l), dtype=complex))[i, j] = complex(re, im)
        return cls.from_modes(modes, l=l)

    def to_table(self) -> list[tuple[int, int, int, float, float]]:
        d = self.degree
        out = []
        for idx, c in enumerate(self.coeffs):
            for i, j in zip(*np.nonzero(c)):
                out.append((idx - d, int(i), int(j), float(c[i, j].real), float(c[i, j].imag)))
        return out

    # structure --------------------------------------------------------------

    @property
    def l(self) -> int:
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    def coeff(self, k: int) -> np.ndarray:
        d = self.degree
        if abs(k) > d:
            return np.zeros((self.l, self.l), dtype=complex)
        return self.coeffs[k + d]

    def _padded(self, d: int) -> np.ndarray:
        pad = d - self.degree
        return np.pad(self.coeffs, ((pad, pad), (0, 0), (0, 0)))

    def __add__(self, other: "TrigMatrixPoly") -> "TrigMatrixPoly":
        if other.l != self.l:
            raise DomainError("cannot add polynomials of different block size")
        d = max(self.degree, other.degree)
        return TrigMatrixPoly(self._padded(d) + other._padded(d))

    def __mul__(self, scalar: float) -> "TrigMatrixPoly":
        return TrigMatrixPoly(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def allclose(self, other: "TrigMatrixPoly", atol: float = 1e-12) -> bool:
        d = max(self.degree, other.degree)
        return bool(np.allclose(self._padded(d), other._padded(d), rtol=0.0, atol=atol))

    def is_constant(self) -> bool:
        d = self.degree
        return bool(np.all(np.delete(self.coeffs, d, axis=0) == 0))

    # evaluation ---------------------------------------------------------------

    def evaluate(self, z, annulus_r: float | None = None) -> np.ndarray:
        """Values at complex points ``z``; shape ``z.shape + (l, l)``.

        If ``annulus_r`` is given, every point must satisfy ``1 - r < |z| < 1 + r``.
        """
        z = np.asarray(z, dtype=complex)
        if annulus_r is not None:
            check_in_annulus(z, annulus_r)
        return self.at_phase(np.angle(z) / (2 * np.pi), np.abs(z))

    def at_phase(self, x, radius=1.0) -> np.ndarray:
        """Values at ``radius * e(x)``; the modulus enters only through ``radius**k``.

        Keeping radius and phase separate means translating a point along the
        orbit never moves it off its circle.
        """
        x = np.asarray(x, dtype=float)
        s = np.asarray(radius, dtype=float)
        x, s = np.broadcast_arrays(x, s)
        d = self.degree
        ks = np.arange(-d, d + 1)
        if d == 0:
            basis = np.ones(x.shape + (1,), dtype=complex)
        else:
            basis = s[..., None] ** ks * np.exp(2j * np.pi * x[..., None] * ks)
        return np.einsum("...k,kij->...ij", basis, self.coeffs)

    def real_values(self, x) -> np.ndarray:
        """Values on the real torus as a real array (imaginary residual is checked)."""
        vals = self.at_phase(x)
        resid = np.abs(vals.imag).max(initial=0.0)
        if resid > REALITY_TOL * (1.0 + np.abs(vals).max(initial=0.0)):
            raise DomainError(f"imaginary residual {resid:.2e} on the real torus")
        return vals.real

    def translate(self, omega: float, n: int) -> "TrigMatrixPoly":
        """The shifted function ``x -> M(x + n omega)``."""
        d = self.degree
        ks = np.arange(-d, d + 1)
        return TrigMatrixPoly(self.coeffs * e(ks * n * omega)[:, None, None])

    def truncate(self, new_degree: int) -> "TrigMatrixPoly":
        return fourier_truncate(self, new_degree)


def check_in_annulus(z, annulus_r: float):
    mod = np.abs(np.asarray(z))
    if np.any(mod <= 1 - annulus_r) or np.any(mod >= 1 + annulus_r):
        raise DomainError(f"point(s) outside the annulus 1-r < |z| < 1+r with r={annulus_r}")


def evaluate(M: TrigMatrixPoly, z, annulus_r: float | None = None) -> np.ndarray:
    return M.evaluate(z, annulus_r)


def translate(M: TrigMatrixPoly, omega: float, n: int) -> TrigMatrixPoly:
    return M.translate(omega, n)


def sup_norm(M: TrigMatrixPoly, radius: float = 1.0, grid_size: int = 256) -> float:
    """Largest operator 2-norm of ``M`` over ``grid_size`` equispaced points of ``|z| = radius``."""
    if grid_size < 64:
        raise DomainError("grid_size must be at least 64")
    vals = M.at_phase(np.arange(grid_size) / grid_size, radius)
    return float(np.linalg.svd(vals, compute_uv=False)[..., 0].max())


def tail_bound(M: TrigMatrixPoly, new_degree: int, radius: float = 1.0) -> float:
    """Sum of ``||c_k|| radius**k`` over the modes dropped by truncation to ``new_degree``."""
    d = M.degree
    total = 0.0
    for k in range(-d, d + 1):
        if abs(k) > new_degree:
            total += np.linalg.norm(M.coeff(k), 2) * radius ** k
    return float(total)


def fourier_truncate(M: TrigMatrixPoly, new_degree: int) -> TrigMatrixPoly:
    if new_degree < 0:
        raise DomainError("new_degree must be non-negative")
    d = M.degree
    if new_degree >= d:
        return M
    return TrigMatrixPoly(M.coeffs[d - new_degree: d + new_degree + 1])


@dataclass(frozen=True)
class ConstantEigenvalueCheck:
    ok: bool
    witness: float | None = None
    spread: float | None = None

    def __bool__(self):
        return self.ok


def no_constant_eigenvalue_check(F: TrigMatrixPoly, probe_grid: int = 256,
                                 rtol: float = 1e-8) -> ConstantEigenvalueCheck:
    """Sampled test that no ``w`` is an eigenvalue of ``F(x)`` for every probed ``x``.

    Candidates ``w`` are the eigenvalues at the first probe point; ``w`` is
    declared constant when its distance to the spectrum of ``F(x)`` stays below
    ``rtol * (1 + |w|)`` across the whole grid.  This is a heuristic: a finite
    grid cannot certify ``det[F(x) - w] != 0`` as an analytic function.
    """
    xs = np.arange(probe_grid) / probe_grid
    eigs = np.linalg.eigvalsh(F.real_values(xs))
    worst = None
    for w in eigs[0]:
        dist = np.abs(eigs - w).min(axis=1).max()
        if dist <= rtol * (1.0 + abs(w)):
            return ConstantEigenvalueCheck(False, float(w), float(dist))
        worst = dist if worst is None else min(worst, dist)
    return ConstantEigenvalueCheck(True, None, float(worst))
