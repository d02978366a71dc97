"""Quasi-periodic block Jacobi operators and their Dirichlet restrictions.

The operator acts on sequences of l-vectors by

    [H psi]_n = -W_{n+1} psi_{n+1} - W_n^T psi_{n-1} + V_n psi_n,
    V = lambda F + R,   M_n(x) = M(x + n omega).

On an interval [a, b] it is the block tridiagonal matrix with V_n on the
diagonal, -W_{n+1} above and -W_{n+1}^T below.  Scalar indices run over
1..N*l and block ``n`` holds scalar indices ``(n-1)*l + 1 .. n*l``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import DomainError
from .torus import TrigMatrixPoly, check_in_annulus, sup_norm

GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    l: int
    lam: float
    omega: float
    W: TrigMatrixPoly
    R: TrigMatrixPoly
    F: TrigMatrixPoly
    annulus_r: float = 0.5

    def __post_init__(self):
        if self.l < 1:
            raise DomainError("band width l must be positive")
        if self.lam == 0:
            raise DomainError("coupling must be nonzero")
        if not 0 < self.annulus_r:
            raise DomainError("annulus_r must be positive")
        for name in ("W", "R", "F"):
            if getattr(self, name).l != self.l:
                raise DomainError(f"{name} has block size {getattr(self, name).l}, expected {self.l}")
        object.__setattr__(self, "omega", float(self.omega) % 1.0)

    @property
    def V(self) -> TrigMatrixPoly:
        return self.F * self.lam + self.R

    def with_lambda(self, lam: float) -> "OperatorSpec":
        return replace(self, lam=float(lam))

    def symmetry_defect(self, probe: int = 64) -> float:
        """Largest entrywise asymmetry of R(x) and F(x) over a probe grid."""
        xs = np.arange(probe) / probe
        worst = 0.0
        for M in (self.R, self.F):
            vals = M.real_values(xs)
            worst = max(worst, float(np.abs(vals - vals.swapaxes(-1, -2)).max()))
        return worst

    def det_w_min(self, probe: int = 256) -> float:
        """Smallest |det W(x)| over a probe grid (zero means W may be singular everywhere)."""
        xs = np.arange(probe) / probe
        return float(np.abs(np.linalg.det(self.W.real_values(xs))).min())

    def norms(self, radius: float = 1.0) -> dict:
        return {name: sup_norm(getattr(self, name), radius, 256) for name in ("W", "R", "F")}

    def energy_window(self) -> float:
        """Default half-width of the energy window, ``4 (1 + |lambda|) max(||F||, ||R||, ||W||)``."""
        return 4.0 * (1.0 + abs(self.lam)) * max(self.norms().values())

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "lambda": self.lam,
            "omega": self.omega,
            "annulus_r": self.annulus_r,
            "W": [list(t) for t in self.W.to_table()],
            "R": [list(t) for t in self.R.to_table()],
            "F": [list(t) for t in self.F.to_table()],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def almost_mathieu(lam: float, omega: float = GOLDEN_MEAN, annulus_r: float = 0.5) -> OperatorSpec:
    """l = 1, W = 1, R = 0, F(x) = 2 cos(2 pi x)."""
    return OperatorSpec(
        l=1, lam=lam, omega=omega,
        W=TrigMatrixPoly.constant([[1.0]]),
        R=TrigMatrixPoly.zeros(1),
        F=TrigMatrixPoly.cosine([[1.0]]),
        annulus_r=annulus_r,
    )


def cosine_band(lam: float, shifts=(0.0, 0.3), omega: float = GOLDEN_MEAN, hopping: float = 0.0,
                annulus_r: float = 0.5) -> OperatorSpec:
    """l = len(shifts), W = I, F = diag(2 cos 2 pi (x + s_j)), R = hopping * (nearest neighbours in the band)."""
    l = len(shifts)
    F = TrigMatrixPoly.zeros(l)
    for j, s in enumerate(shifts):
        a = np.zeros((l, l))
        a[j, j] = 1.0
        F = F + TrigMatrixPoly.cosine(a, s)
    R = np.zeros((l, l))
    for j in range(l - 1):
        R[j, j + 1] = R[j + 1, j] = hopping
    return OperatorSpec(l=l, lam=lam, omega=omega, W=TrigMatrixPoly.constant(np.eye(l)),
                        R=TrigMatrixPoly.constant(R), F=F, annulus_r=annulus_r)


# index maps -----------------------------------------------------------------


@dataclass(frozen=True)
class BlockIndex:
    """``gamma = l * n + r`` with ``n = ceil(gamma / l)`` and ``-l < r <= 0``."""

    gamma: int
    n: int
    r: int


def block_index(gamma: int, l: int, N: int | None = None) -> BlockIndex:
    if gamma < 1 or (N is not None and gamma > N * l):
        raise DomainError(f"scalar index {gamma} out of range")
    n = -(-gamma // l)
    return BlockIndex(gamma, n, gamma - l * n)


def scalar_index(n: int, r: int, l: int, N: int | None = None) -> int:
    if not -l < r <= 0 or n < 1 or (N is not None and n > N):
        raise DomainError(f"block coordinates (n={n}, r={r}) out of range")
    return l * n + r


@dataclass(frozen=True)
class IndexMap:
    """Bijection between scalar indices 1..N*l and block coordinates (n, r)."""

    l: int
    N: int

    def __post_init__(self):
        if self.l < 1 or self.N < 1:
            raise DomainError("l and N must be positive")

    def to_block(self, gamma: int) -> BlockIndex:
        return block_index(gamma, self.l, self.N)

    def to_scalar(self, n: int, r: int) -> int:
        return scalar_index(n, r, self.l, self.N)

    def block_of(self) -> np.ndarray:
        """``n(gamma)`` for gamma = 1..N*l, as an array indexed by gamma - 1."""
        return np.repeat(np.arange(1, self.N + 1), self.l)


def index_maps(l: int, N: int) -> IndexMap:
    return IndexMap(l, N)


# Dirichlet matrices -----------------------------------------------------------


def _split_point(point):
    """Return (phase, radius) for a real phase or a complex point."""
    if isinstance(point, (complex, np.complexfloating)):
        z = complex(point)
        return math.atan2(z.imag, z.real) / (2 * math.pi), abs(z), True
    return float(point), 1.0, False


def _check_interval(interval) -> tuple[int, int]:
    a, b = (int(v) for v in interval)
    if b < a:
        raise DomainError(f"empty interval [{a}, {b}]")
    return a, b


def dirichlet_stack(spec: OperatorSpec, xs, interval, E: float = 0.0, radius=1.0,
                    complex_out: bool | None = None) -> np.ndarray:
    """``H_[a,b](z) - E`` at ``z = radius * e(x)`` for every phase in ``xs``; shape (K, N l, N l).

    Block ``n`` of the interval is evaluated at ``radius * e(x + n omega)``: the
    orbit is carried on the phase, so the radius is the same for every block.
    """
    a, b = _check_interval(interval)
    N, l = b - a + 1, spec.l
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    radius = np.broadcast_to(np.asarray(radius, dtype=float), xs.shape)
    if complex_out is None:
        complex_out = bool(np.any(radius != 1.0))
    ns = np.arange(a, b + 1)
    phases = xs[:, None] + ns[None, :] * spec.omega
    rad = radius[:, None] * np.ones_like(phases)
    V = spec.V.at_phase(phases, rad)
    W = spec.W.at_phase(phases[:, 1:], rad[:, 1:]) if N > 1 else None
    if not complex_out:
        V = V.real
        W = W.real if W is not None else None
    K = len(xs)
    H = np.zeros((K, N, l, N, l), dtype=complex if complex_out else float)
    idx = np.arange(N)
    H[:, idx, :, idx, :] = V.transpose(1, 0, 2, 3) - E * np.eye(l)
    if N > 1:
        up = np.arange(N - 1)
        H[:, up, :, up + 1, :] = -W.transpose(1, 0, 2, 3)
        H[:, up + 1, :, up, :] = -W.transpose(1, 0, 3, 2)
    return H.reshape(K, N * l, N * l)


@dataclass(frozen=True, eq=False)
class DirichletMatrix:
    """``H_[a,b](point) - E`` as a dense (N l) x (N l) matrix."""

    spec: OperatorSpec
    interval: tuple[int, int]
    phase: float
    radius: float
    E: float
    entries: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.interval[1] - self.interval[0] + 1

    @property
    def l(self) -> int:
        return self.spec.l

    @property
    def z(self) -> complex:
        return self.radius * complex(np.exp(2j * np.pi * self.phase))

    def block(self, n: int, n2: int) -> np.ndarray:
        """Block (n, n2) with absolute block indices inside the interval."""
        a, b = self.interval
        if not (a <= n <= b and a <= n2 <= b):
            raise DomainError(f"block ({n}, {n2}) outside [{a}, {b}]")
        l = self.l
        i, j = (n - a) * l, (n2 - a) * l
        return self.entries[i:i + l, j:j + l]

    def index_map(self) -> IndexMap:
        return IndexMap(self.l, self.N)


def dirichlet_matrix(spec: OperatorSpec, point, interval, E: float = 0.0) -> DirichletMatrix:
    """Dirichlet restriction of ``H - E`` to ``interval`` at a real phase or complex point.

    A real ``point`` is a phase x on the torus and gives a real symmetric
    matrix; a complex ``point`` is a point z of the annulus.
    """
    a, b = _check_interval(interval)
    x, s, is_complex = _split_point(point)
    if is_complex:
        check_in_annulus(complex(point), spec.annulus_r)
    H = dirichlet_stack(spec, [x], (a, b), E, s, complex_out=is_complex)[0]
    return DirichletMatrix(spec, (a, b), x, s, float(E), H)


def apply(spec: OperatorSpec, x: float, psi: Mapping[int, np.ndarray], n: int) -> np.ndarray:
    """``[H(x) psi]_n`` for a finitely supported ``psi`` given as ``{n: l-vector}``."""
    l = spec.l
    zero = np.zeros(l)

    def get(k):
        return np.asarray(psi.get(k, zero), dtype=float).reshape(l)

    V_n = spec.V.real_values(x + n * spec.omega)
    W_next = spec.W.real_values(x + (n + 1) * spec.omega)
    W_here = spec.W.real_values(x + n * spec.omega)
    return -W_next @ get(n + 1) - W_here.T @ get(n - 1) + V_n @ get(n)
