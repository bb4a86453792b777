"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_ckernels`` mirrors every function here
with the same signature and the same sequence of floating point updates.
"""
import numpy as np

__all__ = ["apply_pauli_steps", "fwht", "jacobi_eigh"]


def _phase_table(d, xmask, zmask, ny):
    idx = np.arange(d, dtype=np.int64)
    partner = idx ^ xmask
    signs = 1.0 - 2.0 * (np.bitwise_count(partner & zmask) & 1)
    return partner, (1j ** ny) * signs


def apply_pauli_steps(state, xmasks, zmasks, nys, thetas):
    """Apply ``exp(-i theta_k P_k)`` for k = 0, 1, ... to ``state`` in place.

    ``state`` has shape ``(d,)`` or ``(d, k)``; the first axis is the
    computational basis index. Pauli string k is encoded by its X mask,
    Z mask and number of Y letters, so that
    ``P|b> = i**ny * (-1)**popcount(b & z) |b ^ x>``.
    """
    d = state.shape[0]
    cache = {}
    view = state.reshape(d, -1)
    for x, z, ny, theta in zip(xmasks, zmasks, nys, thetas):
        key = (int(x), int(z), int(ny) % 4)
        if key not in cache:
            cache[key] = _phase_table(d, *key)
        partner, phase = cache[key]
        c, s = np.cos(theta), np.sin(theta)
        view[:] = c * view - (1j * s) * phase[:, None] * view[partner]
    return state


def fwht(vec):
    """Unnormalized in-place Walsh-Hadamard transform of a float64 vector."""
    n = vec.shape[0]
    if n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")
    h = 1
    while h < n:
        blocks = vec.reshape(-1, 2 * h)
        u = blocks[:, :h].copy()
        v = blocks[:, h:]
        blocks[:, :h] += v
        v *= -1.0
        v += u
        h *= 2
    return vec


def round_robin(m):
    """Tournament schedule of disjoint index pairs covering all pairs of ``range(m)``.

    Returns an int array of shape ``(rounds, m // 2, 2)``. Odd ``m`` gets a
    phantom index ``m`` whose pairs are dropped by the callers.
    """
    size = m + (m & 1)
    players = list(range(size))
    rounds = []
    for _ in range(size - 1):
        rounds.append([(players[i], players[size - 1 - i]) for i in range(size // 2)])
        players = [players[0], players[-1]] + players[1:-1]
    return np.array(rounds, dtype=np.int64).reshape(size - 1, size // 2, 2)


def _offdiag_norm(a):
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return np.sqrt(np.sum(off.real**2 + off.imag**2))


def jacobi_eigh(a, schedule, tol, max_sweeps, vectors=True):
    """Cyclic Jacobi diagonalization of the Hermitian matrix ``a`` (overwritten).

    Rotations are applied round by round over ``schedule`` so that the pairs
    inside one round are disjoint and can be updated together.
    Returns ``(diagonal, v, sweeps)``; ``v`` is None when ``vectors`` is False.
    Sweeps equal to ``max_sweeps + 1`` signal non-convergence.
    """
    d = a.shape[0]
    v = np.eye(d, dtype=np.complex128) if vectors else None
    scale = np.sqrt(np.sum(a.real**2 + a.imag**2))
    threshold = tol * scale
    sweeps = 0
    while _offdiag_norm(a) > threshold:
        if sweeps == max_sweeps:
            return a.diagonal().real.copy(), v, max_sweeps + 1
        sweeps += 1
        for pairs in schedule:
            pairs = pairs[(pairs[:, 0] < d) & (pairs[:, 1] < d)]
            p, q = pairs[:, 0], pairs[:, 1]
            apq = a[p, q]
            mag = np.abs(apq)
            keep = mag > 1e-300
            if not keep.any():
                continue
            p, q, apq, mag = p[keep], q[keep], apq[keep], mag[keep]
            app = a[p, p].real
            aqq = a[q, q].real
            e = apq / mag
            tau = (aqq - app) / (2.0 * mag)
            t = np.where(tau >= 0.0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            ec = np.conj(e)
            colp, colq = a[:, p], a[:, q]
            a[:, p] = c * colp - (s * ec) * colq
            a[:, q] = s * colp + (c * ec) * colq
            rowp, rowq = a[p, :], a[q, :]
            a[p, :] = c[:, None] * rowp - (s * e)[:, None] * rowq
            a[q, :] = s[:, None] * rowp + (c * e)[:, None] * rowq
            a[p, q] = 0.0
            a[q, p] = 0.0
            a[p, p] = app - t * mag
            a[q, q] = aqq + t * mag
            if vectors:
                vp, vq = v[:, p], v[:, q]
                v[:, p] = c * vp - (s * ec) * vq
                v[:, q] = s * vp + (c * ec) * vq
    return a.diagonal().real.copy(), v, sweeps
