"""Error metrics for product formulas and the closed-form qDRIFT bounds."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .formulas import ProductFormulaPlan, expected_step, realize_unitary
from .hamiltonian import Hamiltonian, dense
from .linalg import apply, as_matrix, as_state, expm_hermitian, operator_norm, pure_trace_distance

TRIANGLE_SLACK = 1e-12


@dataclass(frozen=True)
class ErrorReport:
    """Bias/fluctuation split of a product-formula error.

    ``bias`` is the error of the averaged product, ``fluctuation`` the distance
    of the sampled product from that average, ``total`` the actual error.
    """

    bias: float
    fluctuation: float
    total: float
    kind: str = "operator-norm"

    def __post_init__(self):
        if self.total > self.bias + self.fluctuation + TRIANGLE_SLACK:
            raise AssertionError(
                f"triangle inequality violated: total={self.total!r} > "
                f"bias={self.bias!r} + fluctuation={self.fluctuation!r}"
            )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundParams:
    """Inputs of the general random-product concentration bounds.

    Attributes
    ----------
    a : float or array
        Per-step worst-case deviation ``||U_k - V_k|| <= a_k``.
    b : float or array
        Per-step bias ``||U_k - E V_k|| <= b_k``.
    R : float
        Almost-sure martingale increment bound.
    v : float
        Conditional variance bound.
    N : int
    n : int
        Qubit count; the dimension is ``2**n``.
    """

    a: object
    b: object
    R: float
    v: float
    N: int
    n: int

    def __post_init__(self):
        a = np.broadcast_to(np.asarray(self.a, dtype=float), (self.N,))
        b = np.broadcast_to(np.asarray(self.b, dtype=float), (self.N,))
        if np.any(a < 0) or np.any(b < 0) or self.R < 0 or self.v < 0 or self.N < 1 or self.n < 0:
            raise ValueError("bound parameters must be nonnegative and N >= 1")

    @property
    def d(self) -> int:
        return 1 << self.n

    def a_array(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.a, dtype=float), (self.N,))

    def b_array(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.b, dtype=float), (self.N,))

    @classmethod
    def qdrift(cls, t: float, lam: float, N: int, n: int) -> "BoundParams":
        """Parameters of the qDRIFT step: ``a = R = 2 t lam / N``, ``b = (t lam / N)**2``."""
        r = step_radius_bound(t, lam, N)
        return cls(a=r, b=step_bias_bound(t, lam, N), R=r, v=N * r * r, N=N, n=n)


def worst_case_error(U, V) -> float:
    """Operator-norm distance ``||U - V||``."""
    U = as_matrix(U, "U")
    V = as_matrix(V, "V")
    if U.shape != V.shape:
        raise ValueError(f"dimension mismatch: {U.shape} vs {V.shape}")
    return operator_norm(U - V)


def fixed_input_error(U, V, psi) -> float:
    """Euclidean distance ``||(U - V) psi||`` for a normalized input ``psi``."""
    psi = as_state(psi, "psi")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("psi must be normalized")
    return float(np.linalg.norm(apply(U, psi) - apply(V, psi)))


def fixed_input_trace_distance(U, V, psi) -> float:
    """Trace distance between the output states ``U psi`` and ``V psi``."""
    psi = as_state(psi, "psi")
    return pure_trace_distance(apply(U, psi), apply(V, psi))


def exact_unitary(H: Hamiltonian, t: float) -> np.ndarray:
    return expm_hermitian(dense(H), t)


def error_decomposition(H: Hamiltonian, t: float, N: int, plan: ProductFormulaPlan, U=None) -> ErrorReport:
    """Split the error of a qDRIFT plan into bias and fluctuation.

    ``bias = ||(E V)^N - U||``, ``fluctuation = ||V_plan - (E V)^N||`` and
    ``total = ||V_plan - U||``.
    """
    if U is None:
        U = exact_unitary(H, t)
    avg = np.linalg.matrix_power(expected_step(H, t, N), N)
    V = realize_unitary(plan, H)
    return ErrorReport(
        bias=operator_norm(avg - U),
        fluctuation=operator_norm(V - avg),
        total=operator_norm(V - U),
    )


def bias_bound(t: float, lam: float, N: int) -> float:
    """``t**2 lam**2 / N``, bounding ``||U - E[V_N ... V_1]||``."""
    return (t * lam) ** 2 / N


def step_bias_bound(t: float, lam: float, N: int) -> float:
    """``t**2 lam**2 / N**2``, bounding ``||E V - U**(1/N)||``."""
    return (t * lam / N) ** 2


def step_radius_bound(t: float, lam: float, N: int) -> float:
    """``2 t lam / N``, bounding ``||V - E V||`` for every step."""
    return 2.0 * t * lam / N


def _cap(x: float) -> float:
    return float(min(1.0, x))


def freedman_tail(eps: float, t: float, lam: float, N: int, n: int, simplified: bool = False) -> float:
    """Tail bound for the qDRIFT fluctuation ``||V_N ... V_1 - (E V)^N||``.

    The default form bounds ``P[fluctuation >= eps]`` by
    ``2d exp(-N eps**2 / (8 (t lam)**2 + 4 (t lam) eps / 3))``.
    With ``simplified=True`` it returns ``2d exp(-N eps**2 / (44 t**2 lam**2))``,
    which bounds ``P[fluctuation >= eps / 2]`` for ``eps <= 4 t lam``.
    Results are capped at 1.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    tl = t * lam
    d = 2.0 ** n
    if tl == 0.0:
        return 0.0 if eps > 0 else 1.0
    if simplified:
        expo = -N * eps * eps / (44.0 * tl * tl)
    else:
        expo = -N * eps * eps / (8.0 * tl * tl + 4.0 * tl * eps / 3.0)
    return _cap(2.0 * d * math.exp(expo))


def general_freedman_tail(tau: float, v: float, R: float, d: int) -> float:
    """Matrix Freedman bound ``2d exp(-(tau**2/2) / (v + R tau / 3))``, capped at 1."""
    if v < 0 or R < 0:
        raise ValueError("v and R must be nonnegative")
    if tau <= 0:
        return 1.0
    denom = v + R * tau / 3.0
    if denom == 0.0:
        return 0.0
    return _cap(2.0 * d * math.exp(-(tau * tau / 2.0) / denom))


def vector_tail_l2(eps: float, t: float, lam: float, N: int) -> float:
    """``exp(-eps**2 N / (8e t**2 lam**2))``.

    Bounds ``P[||(V_N ... V_1 - (E V)^N) psi|| > eps]`` for a fixed ``psi``.
    See :func:`vector_tail_trace` for the output-state version.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    tl2 = (t * lam) ** 2
    if tl2 == 0.0:
        return 0.0 if eps > 0 else 1.0
    return _cap(math.exp(-eps * eps * N / (8.0 * math.e * tl2)))


def vector_tail_trace(eps: float, t: float, lam: float, N: int) -> float:
    """``exp(-eps**2 N / (32e t**2 lam**2))``.

    Bounds ``P[(1/2)||U(rho) - V_N...V_1(rho)||_1 > eps]`` for a fixed state,
    assuming ``N >= (t lam)**2``. Compare :func:`vector_tail_l2`.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    tl2 = (t * lam) ** 2
    if tl2 == 0.0:
        return 0.0 if eps > 0 else 1.0
    return _cap(math.exp(-eps * eps * N / (32.0 * math.e * tl2)))


def mixing_diamond_bound(H: Hamiltonian, t: float, N: int, U=None) -> float:
    """``||U - (E V)^N||``, an upper bound on the average-channel diamond error."""
    if U is None:
        U = exact_unitary(H, t)
    avg = np.linalg.matrix_power(expected_step(H, t, N), N)
    return operator_norm(U - avg)


def gate_counts(eps: float, delta: float, t: float, lam: float, n: int) -> dict:
    """Sufficient qDRIFT gate counts for accuracy ``eps`` and failure rate ``delta``.

    ``worst_case``: bias ``t**2 lam**2 / N <= eps/2`` and fluctuation below
    ``eps/2`` with probability ``1 - delta``, i.e. the larger of
    ``44 t**2 lam**2 log(2d/delta) / eps**2`` and ``2 t**2 lam**2 / eps``.
    ``fixed_input``: trace-distance tail below ``delta``, i.e.
    ``32e t**2 lam**2 log(1/delta) / eps**2``, and at least ``(t lam)**2``.
    ``average``: ``2 t**2 lam**2 / eps``.
    """
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    tl2 = (t * lam) ** 2
    d = 2.0 ** n
    fluct = math.ceil(44.0 * tl2 / eps**2 * math.log(2.0 * d / delta))
    bias = math.ceil(2.0 * tl2 / eps)
    fixed = math.ceil(max(32.0 * math.e * tl2 * math.log(1.0 / delta) / eps**2, tl2))
    return {
        "worst_case": int(max(fluct, bias, 1)),
        "fixed_input": int(max(fixed, 1)),
        "average": int(max(bias, 1)),
    }


def theorem3_bounds(params: BoundParams, const: float = 1.0) -> dict:
    """Error scales for products of independent random unitaries.

    Returns ``worst = 2 sum a``, ``typical = C sqrt(n sum a**2) + 2 sum b``,
    ``fixed = C sqrt(sum a**2) + 2 sum b`` and ``average = 2 sum b``; ``C`` is
    the unspecified absolute constant of the middle two.
    """
    a = params.a_array()
    b = params.b_array()
    sa2 = float(np.sum(a * a))
    sb = float(np.sum(b))
    return {
        "worst": 2.0 * float(np.sum(a)),
        "typical": const * math.sqrt(params.n * sa2) + 2.0 * sb,
        "fixed": const * math.sqrt(sa2) + 2.0 * sb,
        "average": 2.0 * sb,
    }
