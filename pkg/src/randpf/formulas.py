"""Product-formula plans: qDRIFT, Lie-Trotter, Suzuki and permuted Suzuki.

A plan is a chronological list of steps; ``steps[0]`` acts first. Step ``k``
exponentiates either the raw term ``h_j`` (``rescaled=False``) or the
rescaled generator ``X_j = (lam / ||h_j||) h_j`` (``rescaled=True``) for the
stored duration ``s``, giving ``exp(-i s h_j)`` or ``exp(-i s X_j)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from . import kernels
from .hamiltonian import DENSE_MAX_QUBITS, Hamiltonian, is_diagonal
from .linalg import as_state, expm_hermitian

STATEVECTOR_MAX_QUBITS = 24


@dataclass(frozen=True)
class SeededRng:
    """Reproducible random stream identified by ``(seed, stream)``.

    Draws come from numpy's PCG64 seeded through ``SeedSequence`` with the
    stream tuple as spawn key, so any ``(seed, stream)`` pair maps to the same
    bits on every platform and independent streams never overlap in practice.
    """

    seed: int
    stream: tuple = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=tuple(int(k) for k in self.stream))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *keys: int) -> "SeededRng":
        return SeededRng(self.seed, self.stream + tuple(int(k) for k in keys))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, SeededRng):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return SeededRng(int(rng)).generator()


class PlanStep(NamedTuple):
    term: int
    duration: float
    rescaled: bool


@dataclass(frozen=True, eq=False)
class ProductFormulaPlan:
    """Ordered product-formula steps backed by parallel arrays."""

    terms: np.ndarray
    durations: np.ndarray
    rescaled: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        terms = np.ascontiguousarray(self.terms, dtype=np.int64).reshape(-1)
        durations = np.ascontiguousarray(self.durations, dtype=np.float64).reshape(-1)
        rescaled = np.ascontiguousarray(self.rescaled, dtype=bool).reshape(-1)
        if not (terms.shape == durations.shape == rescaled.shape):
            raise ValueError("terms, durations and rescaled must have equal length")
        if not np.all(np.isfinite(durations)):
            raise ValueError("durations must be finite")
        for arr in (terms, durations, rescaled):
            arr.setflags(write=False)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "durations", durations)
        object.__setattr__(self, "rescaled", rescaled)

    def __len__(self):
        return len(self.terms)

    @property
    def steps(self) -> Iterator[PlanStep]:
        for j, s, r in zip(self.terms.tolist(), self.durations.tolist(), self.rescaled.tolist()):
            yield PlanStep(j, s, r)

    def generator_scale(self, H: Hamiltonian) -> np.ndarray:
        """Per-step factor ``g`` such that step ``k`` is ``exp(-i s_k g_k h_j)``."""
        self._check(H)
        return np.where(self.rescaled, H.lam / H.norms[self.terms], 1.0)

    def angles(self, H: Hamiltonian) -> np.ndarray:
        """Rotation angles ``theta`` with step ``exp(-i theta P)`` for Pauli terms."""
        coeffs = H.coefficients[self.terms]
        return self.durations * self.generator_scale(H) * coeffs

    def _check(self, H: Hamiltonian):
        if len(self) and (self.terms.min() < 0 or self.terms.max() >= H.L):
            raise ValueError(f"plan references terms outside range(L={H.L})")

    def signed_time_per_term(self, L: int) -> np.ndarray:
        return np.bincount(self.terms, weights=self.durations, minlength=L)

    def to_dict(self) -> dict:
        return {
            "method": self.meta.get("method", "custom"),
            "t": self.meta.get("t"),
            "seed": self.meta.get("seed"),
            "meta": {k: v for k, v in self.meta.items() if k not in ("method", "t", "seed")},
            "steps": [{"term": s.term, "duration": s.duration, "rescaled": s.rescaled} for s in self.steps],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ProductFormulaPlan":
        steps = data.get("steps", [])
        meta = dict(data.get("meta", {}))
        meta.update(method=data.get("method"), t=data.get("t"), seed=data.get("seed"))
        return cls(
            np.array([s["term"] for s in steps], dtype=np.int64),
            np.array([s["duration"] for s in steps], dtype=np.float64),
            np.array([bool(s["rescaled"]) for s in steps], dtype=bool),
            meta,
        )

    @classmethod
    def from_json(cls, text: str) -> "ProductFormulaPlan":
        return cls.from_dict(json.loads(text))


def _meta(H, method, t, **extra):
    return {"method": method, "t": float(t), "hamiltonian": H.fingerprint(), **extra}


def qdrift_sample(H: Hamiltonian, t: float, N: int, rng) -> ProductFormulaPlan:
    """Sample ``N`` qDRIFT steps ``exp(-i (t/N) X_j)`` with ``j ~ p_j`` i.i.d.

    Terms are drawn by inverse-CDF lookup of uniform variates, with ties going
    to the lower index.
    """
    if N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    cdf = np.cumsum(H.probs)
    cdf[-1] = 1.0
    u = _as_generator(rng).random(N)
    terms = np.searchsorted(cdf, u, side="right")
    seed = rng.seed if isinstance(rng, SeededRng) else None
    stream = list(rng.stream) if isinstance(rng, SeededRng) else None
    return ProductFormulaPlan(
        terms,
        np.full(N, t / N),
        np.ones(N, dtype=bool),
        _meta(H, "qdrift", t, N=int(N), seed=seed, stream=stream),
    )


def first_order_plan(H: Hamiltonian, t: float, N: int) -> ProductFormulaPlan:
    """Lie-Trotter: ``N/L`` cycles of ``exp(-i (tL/N) h_j)`` for ``j = 1..L``."""
    L = H.L
    if N < 1 or N % L:
        raise ValueError(f"N={N} must be a positive multiple of L={L}")
    return ProductFormulaPlan(
        np.tile(np.arange(L), N // L),
        np.full(N, t * L / N),
        np.zeros(N, dtype=bool),
        _meta(H, "first-order", t, N=int(N)),
    )


def suzuki_q(p: int) -> float:
    """Recursion weight ``q_p = 1 / (4 - 4**(1/(2p-1)))``."""
    if p < 2:
        raise ValueError("q_p is defined for p >= 2")
    return 1.0 / (4.0 - 4.0 ** (1.0 / (2 * p - 1)))


def _s2_scales(p: int) -> list:
    """Time multipliers of the second-order blocks inside ``S_2p``."""
    if p == 1:
        return [1.0]
    inner = _s2_scales(p - 1)
    q = suzuki_q(p)
    out = []
    for w in (q, q, 1.0 - 4.0 * q, q, q):
        out.extend(w * x for x in inner)
    return out


def _suzuki_arrays(L, tau, p, order=None):
    order = np.arange(L) if order is None else np.asarray(order, dtype=np.int64)
    sym = np.concatenate([order, order[::-1]])
    scales = _s2_scales(p)
    terms = np.tile(sym, len(scales))
    durations = np.repeat(np.array(scales) * (tau / 2.0), 2 * L)
    return terms, durations


def suzuki2_plan(H: Hamiltonian, tau: float) -> ProductFormulaPlan:
    """Symmetric splitting: ``h_1..h_L`` then ``h_L..h_1``, each for ``tau/2``."""
    return suzuki2p_plan(H, tau, 1)


def suzuki2p_plan(H: Hamiltonian, tau: float, p: int) -> ProductFormulaPlan:
    """Order-``2p`` Suzuki formula with ``2 * 5**(p-1) * L`` raw steps.

    Built by ``S_2p(tau) = S_{2p-2}(q tau)^2 S_{2p-2}((1-4q) tau) S_{2p-2}(q tau)^2``;
    the middle segment has negative duration for ``p >= 2``.
    """
    if p < 1:
        raise ValueError(f"order parameter p must be >= 1, got {p}")
    terms, durations = _suzuki_arrays(H.L, tau, p)
    return ProductFormulaPlan(
        terms, durations, np.zeros(len(terms), dtype=bool), _meta(H, "suzuki", tau, p=int(p))
    )


def permuted_suzuki_plan(H: Hamiltonian, t: float, r: int, p: int, rng) -> ProductFormulaPlan:
    """``r`` blocks ``S_2p(t/r)``, each with its own uniform random term order."""
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if p < 1:
        raise ValueError(f"order parameter p must be >= 1, got {p}")
    gen = _as_generator(rng)
    parts_t, parts_d = [], []
    for _ in range(r):
        terms, durations = _suzuki_arrays(H.L, t / r, p, gen.permutation(H.L))
        parts_t.append(terms)
        parts_d.append(durations)
    terms = np.concatenate(parts_t)
    seed = rng.seed if isinstance(rng, SeededRng) else None
    return ProductFormulaPlan(
        terms,
        np.concatenate(parts_d),
        np.zeros(len(terms), dtype=bool),
        _meta(H, "permuted-suzuki", t, r=int(r), p=int(p), seed=seed),
    )


def _apply_steps(plan: ProductFormulaPlan, H: Hamiltonian, work: np.ndarray) -> np.ndarray:
    """Apply the plan to the rows-indexed array ``work`` (shape (d,) or (d, k)) in place."""
    plan._check(H)
    if len(plan) == 0:
        return work
    if H.all_pauli:
        x, z, y = H.pauli_arrays()
        j = plan.terms
        return kernels.apply_pauli_steps(work, x[j], z[j], y[j], plan.angles(H))
    x, z, y = H.pauli_arrays()
    theta = plan.angles(H)
    scale = plan.generator_scale(H)
    cache = {}
    k, n_steps = 0, len(plan)
    while k < n_steps:
        j = plan.terms[k]
        if H.terms[j].is_pauli:
            end = k
            while end < n_steps and H.terms[plan.terms[end]].is_pauli:
                end += 1
            sel = plan.terms[k:end]
            kernels.apply_pauli_steps(work, x[sel], z[sel], y[sel], theta[k:end])
            k = end
            continue
        s = plan.durations[k] * scale[k]
        key = (int(j), float(s))
        if key not in cache:
            cache[key] = expm_hermitian(H.terms[j].to_dense(), s)
        work[...] = cache[key] @ work
        k += 1
    return work


def realize_unitary(plan: ProductFormulaPlan, H: Hamiltonian) -> np.ndarray:
    """Dense product ``V_N ... V_1`` with ``V_1`` the first step of the plan."""
    if H.n > DENSE_MAX_QUBITS:
        raise ValueError(f"dense realization limited to n <= {DENSE_MAX_QUBITS}, got n={H.n}")
    u = np.eye(H.dim, dtype=np.complex128)
    return _apply_steps(plan, H, u)


def apply_plan(plan: ProductFormulaPlan, H: Hamiltonian, psi) -> np.ndarray:
    """Apply the plan to a state vector step by step, without forming matrices."""
    if H.n > STATEVECTOR_MAX_QUBITS:
        raise ValueError(f"statevector simulation limited to n <= {STATEVECTOR_MAX_QUBITS}")
    psi = as_state(psi, "psi")
    if psi.shape[0] != H.dim:
        raise ValueError(f"state has dimension {psi.shape[0]}, expected {H.dim}")
    return _apply_steps(plan, H, psi.copy())


def step_unitaries(H: Hamiltonian, t: float, N: int):
    """The ``L`` possible qDRIFT step unitaries ``exp(-i (t/N) X_j)``."""
    if H.n > DENSE_MAX_QUBITS:
        raise ValueError(f"dense realization limited to n <= {DENSE_MAX_QUBITS}, got n={H.n}")
    out = []
    for j in range(H.L):
        plan = ProductFormulaPlan([j], [t / N], [True])
        out.append(realize_unitary(plan, H))
    return out


def expected_step(H: Hamiltonian, t: float, N: int) -> np.ndarray:
    """Average qDRIFT step ``E V = sum_j p_j exp(-i (t/N) X_j)``."""
    if N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    acc = np.zeros((H.dim, H.dim), dtype=np.complex128)
    for p, v in zip(H.probs, step_unitaries(H, t, N)):
        acc += p * v
    return acc


def diagonal_phases(H: Hamiltonian, t: float | None = None, plan: ProductFormulaPlan | None = None) -> np.ndarray:
    """Phase vector ``S`` with ``exp(-i S(b))|b>`` for diagonal Hamiltonians.

    With ``t`` this is the exact evolution ``S(b) = t sum_j c_j <b|Z_j|b>``;
    with ``plan`` it is the accumulated phase of the product formula. Both are
    computed with one Walsh-Hadamard transform of the per-Z-mask angle totals.
    """
    if not is_diagonal(H):
        raise ValueError("diagonal_phases requires a Hamiltonian of I/Z strings")
    if (t is None) == (plan is None):
        raise ValueError("pass exactly one of t or plan")
    if H.n > STATEVECTOR_MAX_QUBITS:
        raise ValueError(f"diagonal phases limited to n <= {STATEVECTOR_MAX_QUBITS}")
    _, zmask, _ = H.pauli_arrays()
    if plan is None:
        weights = t * H.coefficients
        masks = zmask
    else:
        weights = plan.angles(H)
        masks = zmask[plan.terms]
    acc = np.bincount(masks, weights=weights, minlength=H.dim).astype(np.float64)
    return kernels.fwht(np.ascontiguousarray(acc))
