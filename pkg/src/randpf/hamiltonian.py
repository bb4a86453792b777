"""Hamiltonians as weighted sums of Pauli strings or dense Hermitian blocks."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .linalg import as_matrix, operator_norm

DENSE_MAX_QUBITS = 12
_LETTERS = "IXYZ"


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis; ``letters[0]`` acts on qubit 0.

    Qubit 0 is the most significant bit of the computational basis index, so
    ``"XI"`` flips the leading bit. The string acts on basis states as
    ``P|b> = i**ny * (-1)**popcount(b & zmask) |b ^ xmask>``.
    """

    letters: str

    def __post_init__(self):
        if not self.letters or any(c not in _LETTERS for c in self.letters):
            raise ValueError(f"invalid Pauli string {self.letters!r}")

    @property
    def n(self) -> int:
        return len(self.letters)

    def _mask(self, chars) -> int:
        n = self.n
        return sum(1 << (n - 1 - k) for k, c in enumerate(self.letters) if c in chars)

    @property
    def xmask(self) -> int:
        return self._mask("XY")

    @property
    def zmask(self) -> int:
        return self._mask("ZY")

    @property
    def ny(self) -> int:
        return self.letters.count("Y")

    @property
    def is_diagonal(self) -> bool:
        return self.xmask == 0

    def to_dense(self) -> np.ndarray:
        if self.n > DENSE_MAX_QUBITS:
            raise ValueError(f"dense realization limited to n <= {DENSE_MAX_QUBITS}")
        d = 1 << self.n
        b = np.arange(d, dtype=np.int64)
        signs = 1.0 - 2.0 * (np.bitwise_count(b & self.zmask) & 1)
        m = np.zeros((d, d), dtype=np.complex128)
        m[b ^ self.xmask, b] = (1j ** self.ny) * signs
        return m

    def __str__(self):
        return self.letters


Operator = Union[PauliString, np.ndarray]


@dataclass(frozen=True, eq=False)
class HamiltonianTerm:
    """A term ``coefficient * operator``.

    ``operator`` is a :class:`PauliString` or a dense Hermitian matrix.
    """

    coefficient: float
    operator: Operator

    def __post_init__(self):
        c = float(self.coefficient)
        if not np.isfinite(c) or c == 0.0:
            raise ValueError(f"coefficient must be finite and nonzero, got {self.coefficient!r}")
        object.__setattr__(self, "coefficient", c)
        if not isinstance(self.operator, PauliString):
            m = as_matrix(self.operator, "term operator")
            if np.max(np.abs(m - m.conj().T)) > 1e-10:
                raise ValueError("dense term operator must be Hermitian")
            d = m.shape[0]
            if d & (d - 1):
                raise ValueError(f"dense term dimension must be a power of two, got {d}")
            m = m.copy()
            m.setflags(write=False)
            object.__setattr__(self, "operator", m)

    @property
    def is_pauli(self) -> bool:
        return isinstance(self.operator, PauliString)

    @property
    def num_qubits(self) -> int:
        if self.is_pauli:
            return self.operator.n
        return int(self.operator.shape[0]).bit_length() - 1

    def to_dense(self) -> np.ndarray:
        if self.is_pauli:
            return self.coefficient * self.operator.to_dense()
        return self.coefficient * np.asarray(self.operator)


def term_norm(term: HamiltonianTerm) -> float:
    """Operator norm of a term: ``|c|`` for Pauli strings."""
    if term.is_pauli:
        return abs(term.coefficient)
    return operator_norm(term.to_dense())


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Sum of terms on ``n`` qubits with cached strength statistics.

    Attributes
    ----------
    n : int
    terms : tuple of HamiltonianTerm
    norms : ndarray
        ``||h_j||`` per term.
    lam : float
        Total strength ``sum_j ||h_j||``.
    Lam : float
        Largest term norm.
    probs : ndarray
        Sampling distribution ``||h_j|| / lam``.
    """

    n: int
    terms: tuple
    norms: np.ndarray = field(init=False, repr=False)
    lam: float = field(init=False)
    Lam: float = field(init=False)
    probs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not terms:
            raise ValueError("a Hamiltonian needs at least one term")
        for k, term in enumerate(terms):
            if term.num_qubits != self.n:
                raise ValueError(f"term {k} acts on {term.num_qubits} qubits, expected {self.n}")
        norms = np.array([term_norm(term) for term in terms], dtype=np.float64)
        if np.any(norms <= 0.0):
            raise ValueError("every term must have positive norm")
        lam = float(norms.sum())
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "norms", norms)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "Lam", float(norms.max()))
        object.__setattr__(self, "probs", norms / lam)
        for arr in (norms, self.probs):
            arr.setflags(write=False)

    @classmethod
    def from_pauli(cls, n: int, items: Sequence) -> "Hamiltonian":
        """Build from ``(coefficient, "XYZI...")`` pairs."""
        return cls(n, tuple(HamiltonianTerm(c, PauliString(s)) for c, s in items))

    @property
    def L(self) -> int:
        return len(self.terms)

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def all_pauli(self) -> bool:
        return all(term.is_pauli for term in self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([term.coefficient for term in self.terms])

    def pauli_arrays(self):
        """Per-term ``(xmask, zmask, ny)`` int64 arrays; dense terms get -1."""
        x = np.full(self.L, -1, dtype=np.int64)
        z = np.full(self.L, -1, dtype=np.int64)
        y = np.full(self.L, -1, dtype=np.int64)
        for k, term in enumerate(self.terms):
            if term.is_pauli:
                x[k], z[k], y[k] = term.operator.xmask, term.operator.zmask, term.operator.ny
        return x, z, y

    def to_dict(self) -> dict:
        if not self.all_pauli:
            raise ValueError("only Pauli-string Hamiltonians can be serialized")
        return {
            "n": self.n,
            "terms": [{"coeff": t.coefficient, "pauli": t.operator.letters} for t in self.terms],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Hamiltonian":
        try:
            n = int(data["n"])
            items = [(float(t["coeff"]), str(t["pauli"])) for t in data["terms"]]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed Hamiltonian JSON: {exc}") from exc
        return cls.from_pauli(n, items)

    @classmethod
    def from_json(cls, text: str) -> "Hamiltonian":
        return cls.from_dict(json.loads(text))

    def fingerprint(self) -> str:
        """Short content hash used to tag plans."""
        h = hashlib.sha256(str(self.n).encode())
        for term in self.terms:
            h.update(repr(term.coefficient).encode())
            if term.is_pauli:
                h.update(term.operator.letters.encode())
            else:
                h.update(np.ascontiguousarray(term.operator).tobytes())
        return h.hexdigest()[:16]


def strength_stats(H: Hamiltonian):
    """Return ``(lam, Lam, probs)``."""
    return H.lam, H.Lam, H.probs.copy()


def dense(H: Hamiltonian) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of ``H`` (``n <= 12``)."""
    if H.n > DENSE_MAX_QUBITS:
        raise ValueError(f"dense realization limited to n <= {DENSE_MAX_QUBITS}, got n={H.n}")
    d = H.dim
    m = np.zeros((d, d), dtype=np.complex128)
    b = np.arange(d, dtype=np.int64)
    for term in H.terms:
        if term.is_pauli:
            p = term.operator
            signs = 1.0 - 2.0 * (np.bitwise_count(b & p.zmask) & 1)
            m[b ^ p.xmask, b] += term.coefficient * (1j ** p.ny) * signs
        else:
            m += term.to_dense()
    return m


def is_diagonal(H: Hamiltonian) -> bool:
    """True iff every term is a Pauli string made of I and Z only."""
    return all(term.is_pauli and term.operator.is_diagonal for term in H.terms)


def heisenberg_1d(n: int) -> Hamiltonian:
    """Open Heisenberg chain ``1/(n-1) sum_i (XX + YY + ZZ)_{i,i+1}``; ``lam = 3``."""
    if n < 2:
        raise ValueError("heisenberg_1d needs n >= 2")
    c = 1.0 / (n - 1)
    items = []
    for i in range(n - 1):
        for a in "XYZ":
            s = ["I"] * n
            s[i] = s[i + 1] = a
            items.append((c, "".join(s)))
    return Hamiltonian.from_pauli(n, items)


def single_site_z(n: int, scale: float = 1.0) -> Hamiltonian:
    """``scale * sum_k Z_k``; term ``k`` is ``Z`` on qubit ``k``."""
    if n < 1:
        raise ValueError("single_site_z needs n >= 1")
    items = []
    for k in range(n):
        s = ["I"] * n
        s[k] = "Z"
        items.append((scale, "".join(s)))
    return Hamiltonian.from_pauli(n, items)


def z_string(n: int, p: int) -> str:
    """Letters of ``Z_p``: Z where bit ``p`` is set (qubit 0 is the top bit)."""
    return "".join("Z" if (p >> (n - 1 - k)) & 1 else "I" for k in range(n))


def all_z_strings(n: int, signs=None, weight: float = 1.0) -> Hamiltonian:
    """``weight * sum_p signs[p] Z_p`` over all ``2**n`` Z/I strings.

    Term index ``p`` is the bitmask of the string, so ``<b|Z_p|b> = (-1)**popcount(b & p)``.
    """
    if not 1 <= n <= DENSE_MAX_QUBITS:
        raise ValueError(f"all_z_strings needs 1 <= n <= {DENSE_MAX_QUBITS}")
    L = 1 << n
    signs = np.ones(L) if signs is None else np.asarray(signs, dtype=float)
    if signs.shape != (L,) or not np.all(np.abs(signs) == 1.0):
        raise ValueError(f"signs must be a length-{L} vector of +-1")
    return Hamiltonian.from_pauli(n, [(weight * s, z_string(n, p)) for p, s in enumerate(signs)])


MODELS = {
    "heisenberg": heisenberg_1d,
    "single-site-z": single_site_z,
    "all-z": all_z_strings,
}


def build_model(name: str, n: int, **kwargs) -> Hamiltonian:
    """Look up a named model builder."""
    try:
        builder = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    return builder(n, **kwargs)
