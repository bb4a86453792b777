"""Dense complex linear algebra used by the simulators and error metrics.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128`` and shape
``(d, d)``; state vectors have shape ``(d,)``. Hermitian eigenproblems go
through the cyclic Jacobi kernel in :mod:`randpf.kernels`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
NORM_TOL = 1e-10
JACOBI_TOL = 1e-13
MAX_SWEEPS = 100


class EigenConvergenceError(ArithmeticError):
    """Raised when the Jacobi iteration does not converge within the sweep cap."""


@dataclass(frozen=True)
class HermitianEigen:
    """Eigendecomposition ``H = Q diag(w) Q^H`` with ``w`` ascending.

    Attributes
    ----------
    eigenvalues : ndarray of float, shape (d,)
    eigenvectors : ndarray of complex, shape (d, d)
        Orthonormal columns; column ``k`` belongs to ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.conj().T


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_state(psi, name: str = "state") -> np.ndarray:
    v = np.asarray(psi, dtype=np.complex128)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def _check_same_dim(a, b):
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    gram = u.conj().T @ u
    return bool(np.max(np.abs(gram - np.eye(u.shape[0]))) <= tol)


def matmul(a, b) -> np.ndarray:
    """Matrix product ``a @ b`` of two square complex matrices."""
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    _check_same_dim(a, b)
    return a @ b


def apply(u, psi) -> np.ndarray:
    """Matrix-vector product ``u @ psi``."""
    u = as_matrix(u, "U")
    psi = as_state(psi, "psi")
    if u.shape[1] != psi.shape[0]:
        raise ValueError(f"dimension mismatch: {u.shape[1]} vs {psi.shape[0]}")
    return u @ psi


@lru_cache(maxsize=32)
def _schedule(d: int) -> np.ndarray:
    sched = kernels.round_robin(d)
    sched.setflags(write=False)
    return sched


def _jacobi(h: np.ndarray, vectors: bool):
    d = h.shape[0]
    work = np.array(h, dtype=np.complex128, order="C", copy=True)
    # exact hermitian symmetry so the kernel can mirror rows into columns
    work = 0.5 * (work + work.conj().T)
    work = np.ascontiguousarray(work)
    if d == 1:
        v = np.ones((1, 1), dtype=np.complex128) if vectors else None
        return work.real[0].copy(), v
    diag, v, sweeps = kernels.jacobi_eigh(work, _schedule(d), JACOBI_TOL, MAX_SWEEPS, vectors=vectors)
    if sweeps > MAX_SWEEPS:
        raise EigenConvergenceError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps (d={d})")
    return diag, v


def _check_hermitian(h):
    dev = np.max(np.abs(h - h.conj().T))
    if dev > HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")


def hermitian_eig(h) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    h : array_like, shape (d, d)
        Hermitian within ``1e-10`` entrywise.

    Returns
    -------
    HermitianEigen
        Eigenvalues in ascending order with matching orthonormal eigenvectors.

    Raises
    ------
    ValueError
        If ``h`` is not Hermitian.
    EigenConvergenceError
        If the sweep cap is reached.
    """
    h = as_matrix(h, "H")
    _check_hermitian(h)
    w, v = _jacobi(h, vectors=True)
    order = np.argsort(w, kind="stable")
    return HermitianEigen(w[order], np.ascontiguousarray(v[:, order]))


def hermitian_eigvals(h) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (no eigenvectors)."""
    h = as_matrix(h, "H")
    _check_hermitian(h)
    w, _ = _jacobi(h, vectors=False)
    return np.sort(w)


def expm_hermitian(h, theta: float) -> np.ndarray:
    """Return ``exp(-i theta H)`` for Hermitian ``H``."""
    eig = hermitian_eig(h)
    q = eig.eigenvectors
    return (q * np.exp(-1j * theta * eig.eigenvalues)) @ q.conj().T


def operator_norm(a) -> float:
    """Spectral norm, the square root of the largest eigenvalue of ``A^H A``."""
    a = as_matrix(a, "A")
    gram = a.conj().T @ a
    w = hermitian_eigvals(gram)
    return float(np.sqrt(max(w[-1], 0.0)))


def pure_trace_distance(u, v, tol: float = NORM_TOL) -> float:
    """Trace distance ``sqrt(1 - |<u, v>|^2)`` between two normalized pure states."""
    u = as_state(u, "u")
    v = as_state(v, "v")
    _check_same_dim(u, v)
    for name, x in (("u", u), ("v", v)):
        nrm = np.linalg.norm(x)
        if abs(nrm - 1.0) > tol:
            raise ValueError(f"{name} is not normalized (norm {nrm!r})")
    overlap = abs(np.vdot(u, v)) ** 2
    return float(np.sqrt(min(1.0, max(0.0, 1.0 - overlap))))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> np.ndarray:
    """Convex hull of 2D points by Andrew's monotone chain, counter-clockwise."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float))))
    if len(pts) <= 2:
        return np.array(pts, dtype=float)
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], dtype=float)


def _segment_distance(p, a, b):
    ab = b - a
    denom = ab @ ab
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    s = min(1.0, max(0.0, ((p - a) @ ab) / denom))
    return float(np.hypot(*(p - a - s * ab)))


def hull_distance_to_origin(points) -> float:
    """Euclidean distance from 0 to the convex hull of ``points`` (0 if inside)."""
    hull = convex_hull(points)
    origin = np.zeros(2)
    if len(hull) == 1:
        return float(np.hypot(*hull[0]))
    if len(hull) == 2:
        return _segment_distance(origin, hull[0], hull[1])
    inside = all(
        _cross(hull[k], hull[(k + 1) % len(hull)], origin) >= 0.0 for k in range(len(hull))
    )
    if inside:
        return 0.0
    return min(_segment_distance(origin, hull[k], hull[(k + 1) % len(hull)]) for k in range(len(hull)))


_MIX = (0.7548776662466927, 0.5698402909980532, 1.3247179572447460, 0.4142135623730950)


def normal_eigvals(w) -> np.ndarray:
    """Eigenvalues of a normal matrix via one Hermitian diagonalization.

    Diagonalizes ``Re(W) + alpha Im(W)`` (with Re/Im the Hermitian and
    anti-Hermitian parts) for an irrational ``alpha``; its eigenvectors also
    diagonalize ``W`` unless two eigenvalues collide, which is detected from
    the off-diagonal residual and retried with another ``alpha``.
    """
    w = as_matrix(w, "W")
    herm = 0.5 * (w + w.conj().T)
    anti = -0.5j * (w - w.conj().T)
    scale = max(1.0, float(np.max(np.abs(w))))
    for alpha in _MIX:
        q = hermitian_eig(herm + alpha * anti).eigenvectors
        t = q.conj().T @ w @ q
        off = t - np.diag(np.diag(t))
        if np.max(np.abs(off)) <= 1e-9 * scale:
            return np.diag(t).copy()
    raise EigenConvergenceError("could not separate eigenvalues of the normal matrix")


def unitary_diamond_distance(u, v) -> float:
    """Half diamond-norm distance between the channels of two unitaries.

    Equals ``sqrt(1 - delta**2)`` where ``delta`` is the distance from the
    origin to the convex hull of the spectrum of ``U^H V``.
    """
    u = as_matrix(u, "U")
    v = as_matrix(v, "V")
    _check_same_dim(u, v)
    for name, x in (("U", u), ("V", v)):
        if not is_unitary(x):
            raise ValueError(f"{name} is not unitary")
    ev = normal_eigvals(u.conj().T @ v)
    delta = min(1.0, hull_distance_to_origin(np.column_stack([ev.real, ev.imag])))
    return float(np.sqrt(max(0.0, 1.0 - delta * delta)))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random ``d x d`` unitary (QR of a complex Ginibre matrix, phases fixed)."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def haar_state(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector in ``C^d``."""
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)
