"""BDG-type inequality checks on finite spaces.

Every check returns an :class:`~bdgkit.reports.InequalityReport`.  Where
a proof produces an explicit constant it is attached as
``tracked_constant``; elsewhere the suite cap applies.  Proof replays
attach their intermediate steps as ``links``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calculus import (
    covariation,
    jump_maximal,
    maximal,
    quadratic_variation,
    stoch_integral,
)
from .davis import DavisDecomposition, check_dK_bound, davis_decompose, variation
from .errors import DomainError, StructuralError, ValidationError
from .prob_space import ADAPTED, FilteredSpace, Process, cond_expect, running_sum
from .reports import InequalityReport

DEFAULT_CAP = 64.0
EPS_AUX = 1e-9
DOMINANCE_TOL = 1e-10
ISOMETRY_TOL = 1e-10


def lp_norm(space: FilteredSpace, values, p: float) -> float:
    """``(E ||X||^p)^{1/p}`` for an atom-indexed scalar or vector array."""
    return space.lp_norm(values, p)


def conjugate(p: float) -> float:
    return math.inf if p == 1 else p / (p - 1)


def pathwise_report(name: str, a, b, constant: float = 1.0, p: float = math.nan, family: str = "", tol: float = 1e-12) -> InequalityReport:
    """Pathwise ``a <= constant * b`` summarised by the worst atom.

    ``lhs`` is the largest ratio ``a / b`` over atoms with ``b > 0`` and
    ``rhs`` is 1, so ``ratio`` reads directly as the worst pathwise ratio.
    Atoms with ``b == 0`` must have ``a <= tol``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    pos = b > tol * scale
    worst = float(np.max(a[pos] / b[pos])) if pos.any() else 0.0
    if np.any(a[~pos] > constant * b[~pos] + tol * scale):
        worst = math.inf
    # fold the absolute tolerance into the ratio so float ties pass
    if pos.any():
        slack = a[pos] - constant * b[pos]
        if np.all(slack <= tol * scale):
            worst = min(worst, constant)
    return InequalityReport(name, p, worst, 1.0, constant, family)


def equality_report(name: str, a: float, b: float, tol: float, p: float = math.nan, family: str = "") -> InequalityReport:
    """``|a - b| <= tol * max(1, |a|, |b|)`` as a report."""
    scale = max(1.0, abs(a), abs(b))
    return InequalityReport(name, p, abs(a - b) / scale, tol, 1.0, family)


# --- the two sides of the BDG inequality -------------------------------------------


def bdg_sides(M: Process, p: float) -> tuple[float, float]:
    """``(||M*_T||_p, ||[M,M]_T^{1/2}||_p)``."""
    sp = M.space
    return (
        sp.lp_norm(maximal(M).terminal, p),
        sp.lp_norm(np.sqrt(quadratic_variation(M).terminal), p),
    )


def tracked_bdg_constant(p: float, side: str) -> float | None:
    """Constants available in closed form on the exact engine.

    Only ``p = 2`` has one: Doob plus the isometry gives 2 for the upper
    bound and 1 for the lower bound.
    """
    if p == 2:
        return 2.0 if side == "upper" else 1.0
    return None


def bdg_report(M: Process, p: float, side: str, cap: float = DEFAULT_CAP, family: str = "") -> InequalityReport:
    if p < 1:
        raise DomainError("the exact engine covers p >= 1; use montecarlo for 0 < p < 1")
    if side not in ("upper", "lower"):
        raise ValueError(f"side must be 'upper' or 'lower', not {side!r}")
    mstar, qv = bdg_sides(M, p)
    lhs, rhs = (mstar, qv) if side == "upper" else (qv, mstar)
    return InequalityReport(f"bdg-{side}", p, lhs, rhs, tracked_bdg_constant(p, side), family, cap=cap)


def isometry_gap(M: Process) -> float:
    """``|E||M_T||^2 - E[M,M]_T| / E[M,M]_T``."""
    sp = M.space
    e_norm = sp.expectation(np.sum(M.terminal**2, axis=1))
    e_qv = sp.expectation(quadratic_variation(M).terminal)
    return abs(e_norm - e_qv) / e_qv if e_qv > 0 else abs(e_norm)


# --- conditional bounds with a jump-dominating process ------------------------------


def block_max(space: FilteredSpace, values: np.ndarray, n: int) -> np.ndarray:
    """Maximum of a nonnegative atom array over each block of ``partitions[n]``."""
    labels = space.labels[n]
    out = np.zeros(space.n_blocks(n))
    np.maximum.at(out, labels, values)
    return out[labels]


def dominating_process(M: Process, inflate: float = 1.0) -> Process:
    """Increasing adapted ``D`` with ``||dM_n|| <= D_{n-1}``.

    ``D_n`` is the running maximum of the largest next-step jump that is
    still possible given ``F_n``; ``inflate >= 1`` scales it up.
    """
    sp = M.space
    jumps = np.linalg.norm(M.increments, axis=2)
    bound = np.zeros((sp.horizon + 1, sp.n_atoms))
    for n in range(sp.horizon):
        bound[n] = block_max(sp, jumps[n + 1], n)
    bound[-1] = bound[-2] if sp.horizon >= 1 else 0.0
    D = np.maximum.accumulate(bound, axis=0) * inflate
    return Process(sp, D, ADAPTED, check=False)


def check_dominance(M: Process, D: Process, tol: float = DOMINANCE_TOL) -> None:
    """Raise :class:`ValidationError` listing every ``(n, atom)`` with ``||dM_n|| > D_{n-1}``."""
    if D.space is not M.space or D.dim != 1:
        raise StructuralError("D must be a scalar process on the space of M")
    d = D.values[:, :, 0]
    if np.any(np.diff(d, axis=0) < -tol * max(1.0, float(np.max(np.abs(d))))):
        raise ValidationError("D must be increasing")
    jumps = np.linalg.norm(M.increments, axis=2)[1:]
    scale = max(1.0, float(np.max(d)))
    bad = np.argwhere(jumps > d[:-1] + tol * scale)
    if bad.size:
        where = ", ".join(f"(n={n + 1}, atom={a})" for n, a in bad[:20])
        more = "" if len(bad) <= 20 else f" and {len(bad) - 20} more"
        raise ValidationError(f"dominance ||dM_n|| <= D_(n-1) violated at {where}{more}")


CONDITIONAL_RANGES = {
    "clb1": (1.0, 1.0),
    "cub1": (1.0, 1.0),
    "clb2minus": (1.0, 2.0),
    "cub2minus": (1.0, 2.0),
    "clb2plus": (2.0, math.inf),
}


def conditional_constant(which: str, p: float) -> float:
    if which in ("clb1", "clb2minus"):
        return 2.0 / p
    if which in ("cub1", "cub2minus"):
        return 4.0 * math.sqrt(2.0 / p)
    if which == "clb2plus":
        return 2.0 ** (p / 2 + 2)
    raise ValueError(f"unknown conditional bound {which!r}")


def _check_range(which: str, p: float) -> None:
    if which not in CONDITIONAL_RANGES:
        raise ValueError(f"unknown conditional bound {which!r}")
    lo, hi = CONDITIONAL_RANGES[which]
    ok = p == 1 if lo == hi else lo < p < hi
    if not ok:
        raise DomainError(f"{which} is stated for p in {'{1}' if lo == hi else f'({lo}, {hi})'}, got {p}")


def _lower_links(M, D, p, eps, family):
    # N = H_- . M with H = (eps + M* + D)^{p/2 - 1}
    sp = M.space
    V = eps + maximal(M).values + D.values[:, :, 0]
    H = V ** (p / 2 - 1)
    N = stoch_integral(Process(sp, H, ADAPTED, check=False), M, left_limit=True)
    qv_m = quadratic_variation(M).terminal
    qv_n = quadratic_variation(N).terminal
    n_norm = np.linalg.norm(N.terminal, axis=1)
    q = 2 * p / (2 - p)
    links = [
        pathwise_report("aux-qv-lower", H[-1] ** 2 * qv_m, qv_n, 1.0, p, family),
        pathwise_report("aux-N-by-V", n_norm, V[-1] ** (p / 2), 2.0 / p, p, family),
        equality_report("aux-isometry", sp.expectation(n_norm**2), sp.expectation(qv_n), ISOMETRY_TOL, p, family),
        InequalityReport(
            "aux-holder",
            p,
            sp.lp_norm(np.sqrt(qv_m), p),
            sp.lp_norm(1 / H[-1], q) * sp.lp_norm(H[-1] * np.sqrt(qv_m), 2),
            1.0,
            family,
        ),
    ]
    return links


def _upper_links(M, D, p, eps, family):
    # N = H_- . M with H = sqrt(p/2) (eps + [M,M] + D^2)^{p/4 - 1/2}
    sp = M.space
    qv = quadratic_variation(M).values
    W = eps + qv + D.values[:, :, 0] ** 2
    H = math.sqrt(p / 2) * W ** (p / 4 - 0.5)
    N = stoch_integral(Process(sp, H, ADAPTED, check=False), M, left_limit=True)
    nstar = maximal(N).terminal
    qv_n = quadratic_variation(N).terminal
    return [
        pathwise_report("aux-M*-by-N*", maximal(M).terminal, nstar / H[-1], 2.0, p, family),
        pathwise_report("aux-qv-upper", qv_n, (eps + qv[-1]) ** (p / 2), 1.0, p, family),
        InequalityReport("aux-doob-l2", p, sp.lp_norm(nstar, 2), sp.lp_norm(N.terminal, 2), 2.0, family),
    ]


def _plus_links(M, D, p, family):
    # N = H_- . M with H = sqrt(p/2) ([M,M] + D^2)^{p/4 - 1/2}, increasing for p > 2
    sp = M.space
    qv = quadratic_variation(M).values
    W = qv + D.values[:, :, 0] ** 2
    H = math.sqrt(p / 2) * W ** (p / 4 - 0.5)
    N = stoch_integral(Process(sp, H, ADAPTED, check=False), M, left_limit=True)
    mstar = maximal(M).terminal
    qv_n = quadratic_variation(N).terminal
    qv_norm = sp.lp_norm(np.sqrt(qv[-1]), p)
    mixed = sp.lp_norm(np.sqrt(qv[-1]) + D.values[-1, :, 0], p)
    return [
        pathwise_report("aux-qv-power", qv[-1] ** (p / 2), qv_n, 1.0, p, family),
        pathwise_report("aux-N-by-HM*", np.linalg.norm(N.terminal, axis=1), H[-1] * mstar, 2.0, p, family),
        InequalityReport(
            "aux-young-input",
            p,
            qv_norm,
            mixed ** (1 - 2 / p) * sp.lp_norm(mstar, p) ** (2 / p),
            (2 * p) ** (1 / p),
            family,
        ),
    ]


def conditional_bound_report(
    M: Process,
    D: Process,
    p: float,
    which: str,
    family: str = "",
    eps: float = EPS_AUX,
    links: bool = True,
) -> InequalityReport:
    """Bounds for martingales whose jumps are dominated by ``D_-``.

    ``clb1`` / ``clb2minus``:  ||[M,M]^{1/2}||_p <= 2/p ||M* + D||_p
    ``cub1`` / ``cub2minus``:  ||M*||_p <= 4 sqrt(2/p) ||[M,M]^{1/2} + D||_p
    ``clb2plus``:              ||[M,M]^{1/2}||_p <= 2^{p/2+2} ||M*||_p + ||D||_p

    For ``clb2plus`` the report's ``rhs`` is ``||M*||_p + 2^{-(p/2+2)} ||D||_p``
    so that ``tracked_constant * rhs`` is the displayed right-hand side.
    The discrete versions of the auxiliary-martingale steps are attached
    as links when ``links`` is true.
    """
    _check_range(which, p)
    check_dominance(M, D)
    sp = M.space
    c = conditional_constant(which, p)
    mstar = maximal(M).terminal
    root_qv = np.sqrt(quadratic_variation(M).terminal)
    d_T = D.values[-1, :, 0]
    if which in ("clb1", "clb2minus"):
        lhs, rhs = sp.lp_norm(root_qv, p), sp.lp_norm(mstar + d_T, p)
        chain = _lower_links(M, D, p, eps, family) if links else []
    elif which in ("cub1", "cub2minus"):
        lhs, rhs = sp.lp_norm(mstar, p), sp.lp_norm(root_qv + d_T, p)
        chain = _upper_links(M, D, p, eps, family) if links else []
    else:
        lhs = sp.lp_norm(root_qv, p)
        rhs = sp.lp_norm(mstar, p) + sp.lp_norm(d_T, p) / c
        chain = _plus_links(M, D, p, family) if links else []
    return InequalityReport(which, p, lhs, rhs, c, family, links=chain)


# --- Stein's projection estimate and mixed norms ------------------------------------


@dataclass(frozen=True)
class MixedNormSpec:
    p: float
    q: float
    inner_dim: int = 1

    def __post_init__(self):
        if not 1 < self.p < math.inf:
            raise DomainError("outer exponent must lie in (1, inf)")
        if not self.q >= 1:
            raise DomainError("sequence exponent must lie in [1, inf]")


def _as_sequence(space: FilteredSpace, f) -> np.ndarray:
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[1] != space.n_atoms:
        raise StructuralError(f"f must have shape (K, {space.n_atoms}, d)")
    return arr


def mixed_norm(space: FilteredSpace, f, spec: MixedNormSpec) -> float:
    """``(E (sum_k ||f_k||^q)^{p/q})^{1/p}``, with a supremum over ``k`` when ``q = inf``."""
    arr = _as_sequence(space, f)
    if arr.shape[2] != spec.inner_dim:
        raise StructuralError(f"expected inner dimension {spec.inner_dim}, got {arr.shape[2]}")
    inner = np.linalg.norm(arr, axis=2)
    if spec.q == math.inf:
        seq = inner.max(axis=0)
    else:
        seq = np.sum(inner**spec.q, axis=0) ** (1 / spec.q)
    return space.lp_norm(seq, spec.p)


def stein_apply(space: FilteredSpace, f, n_indices: Sequence[int]) -> np.ndarray:
    """``(E_{n_k} f_k)_k`` for a sequence ``f`` of shape ``(K, n_atoms, d)``."""
    arr = _as_sequence(space, f)
    if len(n_indices) != arr.shape[0]:
        raise StructuralError("one time index per sequence element is required")
    out = np.empty_like(arr)
    for k, n in enumerate(n_indices):
        if not 0 <= n <= space.horizon:
            raise StructuralError(f"time index {n} outside 0..{space.horizon}")
        out[k] = space.expect_given(arr[k], int(n))
    return out


def stein_constant(p: float) -> float:
    """Constant obtained by interpolating the two endpoint bounds.

    With norm 1 on ``L_p(l_p)`` and the Doob constant ``p'`` on
    ``L_p(l_inf)``, reaching ``l_2`` takes ``theta = 1 - p/2``, giving
    ``(p')^{1 - p/2}`` for ``1 < p <= 2``.  For ``p > 2`` the
    self-adjointness of the operator transfers the constant of ``p'``.
    """
    if not 1 < p < math.inf:
        raise DomainError("p must lie in (1, inf)")
    if p > 2:
        return stein_constant(conjugate(p))
    return conjugate(p) ** (1 - p / 2)


def stein_report(space: FilteredSpace, f, n_indices: Sequence[int], p: float, family: str = "") -> InequalityReport:
    if not 1 < p < math.inf:
        raise DomainError("p must lie in (1, inf)")
    arr = _as_sequence(space, f)
    Tf = stein_apply(space, arr, n_indices)
    d = arr.shape[2]

    def norm(x, q):
        return mixed_norm(space, x, MixedNormSpec(p, q, d))

    links = [
        InequalityReport("stein-lp-contraction", p, norm(Tf, p), norm(arr, p), 1.0, family),
        InequalityReport("stein-linf-doob", p, norm(Tf, math.inf), norm(arr, math.inf), conjugate(p), family),
    ]
    return InequalityReport("stein", p, norm(Tf, 2), norm(arr, 2), stein_constant(p), family, links=links)


# --- duality and interpolation --------------------------------------------------------


def closed_martingale(space: FilteredSpace, xi: np.ndarray) -> Process:
    """``N_n = E[xi | F_n]`` for an atom-indexed vector ``xi``."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 1:
        xi = xi[:, None]
    vals = np.stack([space.expect_given(xi, n) for n in range(space.horizon + 1)])
    return Process(space, vals, ADAPTED, check=False)


def duality_lower_to_upper_check(M: Process, p: float, family: str = "") -> InequalityReport:
    """Replay of the upper-bound-by-duality argument at exponent ``p'``.

    ``p`` is the exponent of the assumed lower bound; ``M`` is measured in
    ``L_{p'}``.  The extremal ``xi`` in the unit ball of ``L_p(H)`` is
    ``||M_T||^{p'-2} M_T / ||M_T||_{p'}^{p'-1}`` and ``N_n = E_n xi``.
    The headline is ``||M*||_{p'} <= p ||[N,N]^{1/2}||_p ||[M,M]^{1/2}||_{p'}``
    with the instance constant ``p ||[N,N]^{1/2}||_p``.
    """
    if not 1 < p < math.inf:
        raise DomainError("p must lie in (1, inf)")
    sp = M.space
    pc = conjugate(p)
    mT = M.terminal
    m_norm = np.linalg.norm(mT, axis=1)
    norm_pc = sp.lp_norm(mT, pc)
    mstar = sp.lp_norm(maximal(M).terminal, pc)
    root_qv_m = np.sqrt(quadratic_variation(M).terminal)
    if norm_pc == 0:
        return InequalityReport("duality", pc, mstar, 0.0, None, family, cap=DEFAULT_CAP)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(m_norm > 0, m_norm ** (pc - 2), 0.0)
    xi = weight[:, None] * mT / norm_pc ** (pc - 1)
    N = closed_martingale(sp, xi)
    pairing = sp.expectation(np.einsum("ad,ad->a", mT, xi))
    cov = covariation(M, N).terminal
    abs_cov = np.abs(np.einsum("tad,tad->ta", M.increments, N.increments)).sum(axis=0)
    root_qv_n = np.sqrt(quadratic_variation(N).terminal)
    qv_n_norm = sp.lp_norm(root_qv_n, p)
    links = [
        equality_report("duality-xi-unit", sp.lp_norm(xi, p), 1.0, 1e-9, p, family),
        equality_report("duality-attained", pairing, norm_pc, 1e-9, pc, family),
        equality_report("duality-covariation", pairing, sp.expectation(cov), 1e-9, pc, family),
        pathwise_report("duality-kunita-watanabe", abs_cov, root_qv_m * root_qv_n, 1.0, pc, family),
        InequalityReport(
            "duality-holder",
            pc,
            sp.expectation(root_qv_m * root_qv_n),
            sp.lp_norm(root_qv_m, pc) * qv_n_norm,
            1.0,
            family,
        ),
        InequalityReport("duality-doob", pc, mstar, norm_pc, p, family),
        InequalityReport("duality-lower-on-N", p, qv_n_norm, sp.lp_norm(maximal(N).terminal, p), None, family, cap=DEFAULT_CAP),
    ]
    return InequalityReport(
        "duality", pc, mstar, sp.lp_norm(root_qv_m, pc), p * qv_n_norm, family, links=links
    )


def interpolation_theta(p1: float, p2: float, p: float) -> float:
    """``theta`` with ``1/p = (1 - theta)/p1 + theta/p2``."""
    return (1 / p1 - 1 / p) / (1 / p1 - 1 / p2)


def lower_ratio(M: Process, p: float) -> float:
    """``||[M,M]_T^{1/2}||_p / ||M_T||_p``."""
    sp = M.space
    denom = sp.lp_norm(M.terminal, p)
    num = sp.lp_norm(np.sqrt(quadratic_variation(M).terminal), p)
    return num / denom if denom > 0 else (0.0 if num == 0 else math.inf)


def interpolation_lower_check(ensemble: Sequence[Process], p1: float, p2: float, p: float, family: str = "") -> InequalityReport:
    """Interpolate ensemble-measured lower-bound constants between ``p1`` and ``p2``.

    The constants ``C_i`` are the largest ratios
    ``||[M,M]^{1/2}||_{p_i} / ||M_T||_{p_i}`` seen over the ensemble; each
    member must satisfy the bound at ``p`` with ``C_1^{1-theta} C_2^theta``.
    The headline row is the worst member.
    """
    if not (1 < p1 <= p <= p2 < math.inf) or p1 == p2:
        raise DomainError("exponents must satisfy 1 < p1 <= p <= p2 < inf with p1 < p2")
    if not ensemble:
        raise ValueError("empty ensemble")
    theta = interpolation_theta(p1, p2, p)
    c1 = max(lower_ratio(M, p1) for M in ensemble)
    c2 = max(lower_ratio(M, p2) for M in ensemble)
    constant = c1 ** (1 - theta) * c2**theta
    members = []
    for M in ensemble:
        sp = M.space
        members.append(
            InequalityReport(
                "interp-member",
                p,
                sp.lp_norm(np.sqrt(quadratic_variation(M).terminal), p),
                sp.lp_norm(M.terminal, p),
                constant,
                family,
            )
        )
    top = max(members, key=lambda r: (not r.passed, r.ratio))
    out = InequalityReport("interpolation", p, top.lhs, top.rhs, constant, family)
    out.passed = all(r.passed for r in members)
    out.links = [r for r in members if not r.passed]
    return out


# --- replay of the assembled proofs -----------------------------------------------------


def _davis_links(M: Process, dec: DavisDecomposition, p: float, family: str):
    sp = M.space
    S = dec.S.terminal
    mstar = maximal(M).terminal
    var_K = variation(dec.K)
    return {
        "S_norm": sp.lp_norm(S, p),
        "mstar_norm": sp.lp_norm(mstar, p),
        "qv_norm": sp.lp_norm(np.sqrt(quadratic_variation(M).terminal), p),
        "S-by-2M*": pathwise_report("S-by-2M*", S, mstar, 2.0, p, family),
        "S-by-qv": pathwise_report("S-by-qv", S, np.sqrt(quadratic_variation(M).terminal), 1.0, p, family),
        "K*-by-varK": pathwise_report("K*-by-varK", maximal(dec.K).terminal, var_K, 1.0, p, family),
        "qvK-by-varK": pathwise_report("qvK-by-varK", np.sqrt(quadratic_variation(dec.K).terminal), var_K, 1.0, p, family),
    }


def _davis_dominator(dec: DavisDecomposition) -> Process:
    # ||dL_n|| <= 4 S_{n-1}: D := 4 S is adapted, increasing and dominates the jumps of L
    return Process(dec.M.space, 4 * dec.S.values, ADAPTED, check=False)


def _dk_constant(M: Process, p: float) -> float:
    return 4 * (p + 1) if M.dim == 1 else 4.0


def bdg_proof_chain(M: Process, p: float, side: str, family: str = "", dec: DavisDecomposition | None = None) -> InequalityReport:
    """Replay the assembled BDG proof link by link.

    Routes: ``upper`` with ``p >= 2`` goes through the Ito remainder and
    Doob; every other case goes through Davis' decomposition and the
    conditional bounds applied to ``L`` with ``D = 4S``.  Vector-valued
    martingales are replayed for ``p = 1`` and for ``p >= 2`` on the upper
    side; for ``1 < p < 2`` the Stein and duality links are attached.

    The headline uses the constant assembled from the tracked link
    constants; links that have no displayed constant fall back to the cap.
    """
    from .calculus import check_ito_remainder

    sp = M.space
    links: list[InequalityReport] = []
    if side == "upper" and p >= 2:
        ito = check_ito_remainder(M, p)
        mstar_n = sp.lp_norm(maximal(M).terminal, p)
        mT_n = sp.lp_norm(M.terminal, p)
        qv_n = sp.lp_norm(np.sqrt(quadratic_variation(M).terminal), p)
        ito_bound_mean = sp.expectation(ito.bound)
        links += [
            pathwise_report("ito-remainder", ito.remainder, ito.bound, 1.0, p, family, tol=1e-10),
            equality_report("ito-expectation", mT_n**p, sp.expectation(ito.remainder), 1e-9, p, family),
            InequalityReport("doob", p, mstar_n, mT_n, conjugate(p), family),
            InequalityReport(
                "ito-holder",
                p,
                ito_bound_mean,
                p * (p - 1) / 2 * mstar_n ** (p - 2) * qv_n**2,
                1.0,
                family,
            ),
        ]
        constant = conjugate(p) ** (p / 2) * math.sqrt(p * (p - 1) / 2)
        return InequalityReport("chain-upper", p, mstar_n, qv_n, constant, family, links=links)

    if M.dim > 1 and 1 < p < 2:
        return _hilbert_chain(M, p, side, family, dec)
    if M.dim > 1 and side == "lower" and p > 2:
        return _hilbert_lower_high(M, p, family)

    dec = dec or davis_decompose(M)
    L, K = dec.L, dec.K
    D = _davis_dominator(dec)
    base = _davis_links(M, dec, p, family)
    dk = check_dK_bound(M, p, family, dec=dec) if (M.dim == 1 or p == 1) else None
    c_dk = _dk_constant(M, p)
    L_qv = sp.lp_norm(np.sqrt(quadratic_variation(L).terminal), p)
    K_qv = sp.lp_norm(np.sqrt(quadratic_variation(K).terminal), p)
    L_star = sp.lp_norm(maximal(L).terminal, p)
    K_star = sp.lp_norm(maximal(K).terminal, p)

    if side == "lower":
        which = "clb1" if p == 1 else ("clb2minus" if p < 2 else "clb2plus")
        if p == 2:
            # the isometry gives the lower bound with constant 1 directly
            links.append(InequalityReport("isometry-lower", p, base["qv_norm"], sp.lp_norm(M.terminal, 2), 1.0, family))
            links.append(InequalityReport("norm-by-max", p, sp.lp_norm(M.terminal, 2), base["mstar_norm"], 1.0, family))
            return InequalityReport("chain-lower", p, base["qv_norm"], base["mstar_norm"], 1.0, family, links=links)
        cond = conditional_bound_report(L, D, p, which, family)
        c = cond.tracked_constant
        links += [
            InequalityReport("qv-triangle", p, base["qv_norm"], L_qv + K_qv, 1.0, family),
            cond,
            InequalityReport("L*-triangle", p, L_star, base["mstar_norm"] + K_star, 1.0, family),
            base["S-by-2M*"],
            base["K*-by-varK"],
            base["qvK-by-varK"],
            dk,
        ]
        if which == "clb2plus":
            # ||[M,M]^{1/2}|| <= c(||M*|| + ||varK||) + 4||S|| + ||varK||
            constant = c + 8 + 2 * (c + 1) * c_dk
        else:
            # ||[M,M]^{1/2}|| <= c(||M*|| + ||varK|| + 4||S||) + ||varK||
            constant = 9 * c + 2 * (c + 1) * c_dk
        return InequalityReport("chain-lower", p, base["qv_norm"], base["mstar_norm"], constant, family, links=links)

    if side != "upper":
        raise ValueError(f"side must be 'upper' or 'lower', not {side!r}")
    which = "cub1" if p == 1 else "cub2minus"
    cond = conditional_bound_report(L, D, p, which, family)
    c = cond.tracked_constant
    links += [
        InequalityReport("M*-triangle", p, base["mstar_norm"], L_star + K_star, 1.0, family),
        cond,
        pathwise_report(
            "qvL-triangle",
            np.sqrt(quadratic_variation(L).terminal),
            np.sqrt(quadratic_variation(M).terminal) + np.sqrt(quadratic_variation(K).terminal),
            1.0,
            p,
            family,
        ),
        base["S-by-qv"],
        base["K*-by-varK"],
        base["qvK-by-varK"],
        dk,
    ]
    # ||M*|| <= c(||[M,M]^{1/2}|| + ||varK|| + 4||S||) + ||varK||, S <= [M,M]^{1/2}
    constant = 5 * c + (c + 1) * c_dk
    return InequalityReport("chain-upper", p, base["mstar_norm"], base["qv_norm"], constant, family, links=links)


def _hilbert_chain(M: Process, p: float, side: str, family: str, dec: DavisDecomposition | None) -> InequalityReport:
    """Vector-valued replay for ``1 < p < 2``.

    Lower side: Davis, conditional bound on ``L``, the upper bound applied
    to ``K`` (cap), ``[K,K]^{1/2} <= [K1,K1]^{1/2} + [K2,K2]^{1/2}`` and
    Stein for the predictable jumps of ``K2``.  Upper side: the duality
    argument with the conjugate exponent.
    """
    sp = M.space
    if side == "upper":
        dual = duality_lower_to_upper_check(M, conjugate(p), family)
        mstar, qv = bdg_sides(M, p)
        return InequalityReport("chain-upper", p, mstar, qv, None, family, cap=DEFAULT_CAP, links=[dual])
    dec = dec or davis_decompose(M)
    D = _davis_dominator(dec)
    base = _davis_links(M, dec, p, family)
    K1, K2, K = dec.K1, dec.K2, dec.K
    T = sp.horizon
    f = np.moveaxis(K1.increments[1:], 0, 0)
    stein = stein_report(sp, f, list(range(T)), p, family)
    qv1 = np.sqrt(quadratic_variation(K1).terminal)
    qv2 = np.sqrt(quadratic_variation(K2).terminal)
    qvK = np.sqrt(quadratic_variation(K).terminal)
    L_qv = sp.lp_norm(np.sqrt(quadratic_variation(dec.L).terminal), p)
    K_qv = sp.lp_norm(qvK, p)
    which = "clb2minus"
    links = [
        InequalityReport("qv-triangle", p, base["qv_norm"], L_qv + K_qv, 1.0, family),
        conditional_bound_report(dec.L, D, p, which, family),
        bdg_report(K, p, "upper", family=family),
        pathwise_report("qvK-split", qvK, qv1 + qv2, 1.0, p, family),
        equality_report("stein-is-K2", sp.lp_norm(qv2, p), stein.lhs, 1e-10, p, family),
        stein,
        pathwise_report("qvK1-by-varK1", qv1, variation(K1), 1.0, p, family),
        pathwise_report("varK1-by-2S", variation(K1), dec.S.terminal, 2.0, p, family),
        base["S-by-2M*"],
    ]
    return InequalityReport("chain-lower", p, base["qv_norm"], base["mstar_norm"], None, family, cap=DEFAULT_CAP, links=links)


def _hilbert_lower_high(M: Process, p: float, family: str) -> InequalityReport:
    """Vector-valued lower bound for ``p > 2``.

    For ``p >= 4`` the lower bound at ``p`` follows from the upper bound
    at ``p/2`` applied to ``M_- . M`` through ``[M,M] = ||M||^2 - 2 M_- . M``;
    for ``2 < p < 4`` it is interpolated between 2 and 4.
    """
    sp = M.space
    mstar, qv = bdg_sides(M, p)
    if p < 4:
        # the interpolation step needs operator constants, which a single
        # martingale cannot certify; replay both endpoints on M instead
        links = [
            InequalityReport("isometry-lower", 2.0, *bdg_sides(M, 2.0)[::-1], 1.0, family),
            _hilbert_lower_high(M, 4.0, family),
        ]
        return InequalityReport("chain-lower", p, qv, mstar, None, family, cap=DEFAULT_CAP, links=links)
    inner = np.einsum("tad,tad->ta", M.left, M.increments)
    X = Process(sp, running_sum(inner)[:, :, None], ADAPTED, check=False)
    root_qv = np.sqrt(quadratic_variation(M).terminal)
    m_star = maximal(M).terminal
    x_star = maximal(X).terminal
    ibp = quadratic_variation(M).terminal - (np.sum(M.terminal**2, axis=1) - 2 * X.terminal[:, 0])
    scale = max(1.0, float(np.max(quadratic_variation(M).terminal)))
    links = [
        InequalityReport("ibp-square", p, float(np.max(np.abs(ibp))) / scale, 1.0, 1e-10, family),
        pathwise_report("qv-by-M*-and-X*", root_qv, m_star + math.sqrt(2) * np.sqrt(x_star), 1.0, p, family),
        pathwise_report("qvX-by-M*qv", np.sqrt(quadratic_variation(X).terminal), m_star * root_qv, 1.0, p, family),
        bdg_report(X, p / 2, "upper", family=family),
    ]
    return InequalityReport("chain-lower", p, qv, mstar, None, family, cap=DEFAULT_CAP, links=links)
