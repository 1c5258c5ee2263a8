"""Pathwise calculus on finite spaces.

Stochastic integrals with scalar integrands, quadratic (co)variation,
maximal functionals and the finite-variation identities

    (U, V) = U_- . V + V . U          (integration by parts)
    d(U^2) = (U_- + U) dU
    d(U^{1/2}) = dU / (U_-^{1/2} + U^{1/2})
    d(-1/U) = dU / (U U_-)

all of which are exact in discrete time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StructuralError, ValidationError
from .prob_space import ADAPTED, PREDICTABLE, RAW, FilteredSpace, Process, running_sum


@dataclass(frozen=True, eq=False)
class PathFunctional:
    """Scalar functional of a path, shape ``(T + 1, n_atoms)``."""

    name: str
    space: FilteredSpace
    values: np.ndarray

    @property
    def terminal(self) -> np.ndarray:
        return self.values[-1]

    @property
    def left(self) -> np.ndarray:
        out = np.zeros_like(self.values)
        out[1:] = self.values[:-1]
        return out

    def as_process(self, kind: str = ADAPTED) -> Process:
        return Process(self.space, self.values, kind, check=False)


def _scalar(H) -> np.ndarray:
    if isinstance(H, PathFunctional):
        return H.values
    if H.dim != 1:
        raise StructuralError("only scalar integrands are supported")
    return H.values[:, :, 0]


def _same_space(*procs) -> FilteredSpace:
    space = procs[0].space
    if any(p.space is not space for p in procs[1:]):
        raise StructuralError("operands live on different spaces")
    return space


def stoch_integral(H, M: Process, left_limit: bool = False) -> Process:
    """Discrete stochastic integral ``(H . M)_n = sum_{k=1..n} H_k dM_k``.

    ``H`` must be predictable.  With ``left_limit=True`` an adapted ``H``
    is shifted so that ``H_{k-1}`` multiplies ``dM_k``, i.e. the result
    is ``H_- . M``.
    """
    if isinstance(H, (int, float)):
        h = np.full(M.values.shape[:2], float(H))
    else:
        _same_space(H, M)
        h = _scalar(H)
        if left_limit:
            shifted = np.zeros_like(h)
            shifted[1:] = h[:-1]
            h = shifted
        elif isinstance(H, Process) and H.kind != PREDICTABLE:
            sp = M.space
            for n in range(sp.horizon + 1):
                if not sp.is_measurable(h[n], max(n - 1, 0)):
                    raise ValidationError(
                        f"integrand is not predictable at time {n}; pass left_limit=True"
                    )
    dM = M.increments.copy()
    dM[0] = 0.0
    vals = running_sum(h[:, :, None] * dM)
    kind = RAW if M.kind == RAW else ADAPTED
    return Process(M.space, vals, kind, check=False)


def covariation(M: Process, N: Process) -> PathFunctional:
    """``[M, N]_n = sum_{k<=n} (dM_k, dN_k)``, including the time-zero jump."""
    space = _same_space(M, N)
    if M.dim != N.dim:
        raise StructuralError(f"dimension mismatch {M.dim} vs {N.dim}")
    inner = np.einsum("tad,tad->ta", M.increments, N.increments)
    return PathFunctional("[M,N]", space, running_sum(inner))


def quadratic_variation(M: Process) -> PathFunctional:
    dM = M.increments
    sq = np.einsum("tad,tad->ta", dM, dM)
    return PathFunctional("[M,M]", M.space, running_sum(sq))


def maximal(M: Process) -> PathFunctional:
    """``M*_n = max_{k<=n} ||M_k||``."""
    return PathFunctional("M*", M.space, np.maximum.accumulate(M.norms(), axis=0))


def jump_maximal(M: Process) -> PathFunctional:
    """``S_n = max_{k<=n} ||dM_k||``."""
    jumps = np.linalg.norm(M.increments, axis=2)
    return PathFunctional("S", M.space, np.maximum.accumulate(jumps, axis=0))


def total_variation(X: Process) -> PathFunctional:
    """Running sum of ``||dX_k||``."""
    jumps = np.linalg.norm(X.increments, axis=2)
    return PathFunctional("var", X.space, running_sum(jumps))


def _relative(err: np.ndarray, *terms: np.ndarray) -> float:
    # rounding in products scales with the operands, so residuals are
    # measured against max(1, largest term)
    scale = max([1.0] + [float(np.max(np.abs(t))) for t in terms if np.size(t)])
    return float(np.max(np.abs(err))) / scale


def check_ibp(U: Process, V: Process) -> float:
    """Residual of ``(U_n, V_n) = sum (U_{k-1}, dV_k) + sum (V_k, dU_k)``.

    Sums run over ``k = 0..n`` with ``U_{-1} = 0``.  The residual is the
    largest absolute error divided by ``max(1, largest term)``.
    """
    _same_space(U, V)
    if U.dim != V.dim:
        raise StructuralError(f"dimension mismatch {U.dim} vs {V.dim}")
    lhs = np.einsum("tad,tad->ta", U.values, V.values)
    first = running_sum(np.einsum("tad,tad->ta", U.left, V.increments))
    second = running_sum(np.einsum("tad,tad->ta", V.values, U.increments))
    return _relative(lhs - first - second, lhs, first, second)


def check_fv_rules(U: Process) -> dict[str, float]:
    """Residuals of the square, square-root and reciprocal rules for ``U > 0``."""
    if U.dim != 1:
        raise StructuralError("the finite-variation rules are stated for scalar U")
    u = U.values[:, :, 0]
    if np.any(u <= 0):
        raise DomainError("U must be strictly positive")
    prev, cur = u[:-1], u[1:]
    du = cur - prev
    d_sq = cur**2 - prev**2
    d_sqrt = np.sqrt(cur) - np.sqrt(prev)
    d_rec = 1.0 / prev - 1.0 / cur
    rule_sq = (prev + cur) * du
    rule_sqrt = du / (np.sqrt(prev) + np.sqrt(cur))
    rule_rec = du / (cur * prev)
    return {
        "square_rule": _relative(d_sq - rule_sq, d_sq, rule_sq),
        "sqrt_rule": _relative(d_sqrt - rule_sqrt, d_sqrt, rule_sqrt),
        "reciprocal_rule": _relative(d_rec - rule_rec, d_rec, rule_rec),
    }


@dataclass(frozen=True)
class FvLemmaResult:
    lhs: np.ndarray
    rhs: np.ndarray
    ok: bool
    slack: float = 0.0


EPS_REG = 1e-8


def fv_lemma_bounds(V: Process, q: float, eps_reg: float = EPS_REG) -> FvLemmaResult:
    """Both sides of the increasing-function lemma, pathwise at every time.

    For ``q > 1``:  sum V_{k-1} d(V^{q-1})_k  <=  (q-1)/q V_t^q.
    For ``0 < q < 1``:  sum V_{k-1} d(-V^{q-1})_k  <=  (1-q)/q V_t^q,
    evaluated on ``V + eps_reg`` with the slack ``(1-q)/q eps_reg^q``
    added to the right-hand side.
    """
    if q == 1 or not q > 0:
        raise DomainError("q must lie in (0, 1) or (1, inf)")
    if V.dim != 1:
        raise StructuralError("V must be scalar")
    v = V.values[:, :, 0]
    if np.any(v[0] != 0):
        raise DomainError("V must start at zero")
    if np.any(np.diff(v, axis=0) < 0):
        raise DomainError("V must be increasing")
    if q > 1:
        powered = v ** (q - 1)
        terms = v[:-1] * np.diff(powered, axis=0)
        rhs = (q - 1) / q * v**q
        slack = 0.0
    else:
        w = v + eps_reg
        powered = w ** (q - 1)
        terms = w[:-1] * (powered[:-1] - powered[1:])
        slack = (1 - q) / q * eps_reg**q
        rhs = (1 - q) / q * v**q + slack
    lhs = np.vstack([np.zeros((1, v.shape[1])), running_sum(terms)])
    ok = bool(np.all(lhs <= rhs + 1e-12 * np.maximum(1.0, rhs)))
    return FvLemmaResult(lhs, rhs, ok, slack)


@dataclass(frozen=True)
class ItoRemainder:
    remainder: np.ndarray
    bound: np.ndarray
    ok: bool
    martingale_part_mean: float
    identity_residual: float


def check_ito_remainder(M: Process, p: float) -> ItoRemainder:
    """Taylor remainder of ``||x||^p`` summed along the path.

    The remainder is compared pathwise with
    ``p(p-1)/2 (M*_T)^{p-2} [M,M]_T``; the first-order part
    ``p ||M_{n-1}||^{p-2} (M_{n-1}, dM_n)`` must have zero mean.
    """
    if p < 2:
        raise DomainError("the Taylor bound needs p >= 2")
    norms = M.norms()
    prev = M.values[:-1]
    prev_norm = norms[:-1]
    dM = M.increments[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(prev_norm > 0, prev_norm ** (p - 2), 1.0 if p == 2 else 0.0)
    first_order = p * weight * np.einsum("tad,tad->ta", prev, dM)
    steps = norms[1:] ** p - prev_norm**p - first_order
    remainder = steps.sum(axis=0)
    mstar = norms.max(axis=0)
    qv = np.sum(M.increments**2, axis=(0, 2))
    bound = p * (p - 1) / 2 * mstar ** (p - 2) * qv
    ok = bool(np.all(remainder <= bound + 1e-10 * np.maximum(1.0, bound)))
    mart = first_order.sum(axis=0)
    mean = float(M.space.expectation(mart))
    lhs = norms[-1] ** p - norms[0] ** p
    resid = _relative(lhs - mart - remainder, lhs, mart, remainder)
    return ItoRemainder(remainder, bound, ok, mean, resid)
