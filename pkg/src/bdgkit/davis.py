"""Davis' decomposition ``M = L + K`` of a discrete-time martingale.

With ``S`` the running maximum of the jump norms, the big jumps

    dK1_n = dM_n 1{||dM_n|| >= 2 S_{n-1}}

are collected into ``K1`` (``S_{-1} := 0``), ``K2`` is the compensator of
``K1``, ``K = K1 - K2`` and ``L = M - K``.  In discrete time every jump
time is predictable, so the bound ``||dL|| <= 4 S_-`` comes from
``||dL1|| < 2 S_-`` and ``dK2 = -E[dL1 | F_-]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import PathFunctional, jump_maximal
from .compensation import compensator, split_by_sign
from .errors import UnsupportedError, ValidationError
from .prob_space import ADAPTED, Process, is_martingale, running_sum
from .reports import InequalityReport

IDENTITY_TOL = 1e-12
JUMP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DavisDecomposition:
    M: Process
    L: Process
    K: Process
    K1: Process
    K2: Process
    S: PathFunctional

    def certify(self) -> dict:
        """Check properties (i)-(iii) and the compensator jump bound.

        Returns the booleans together with the worst observed margins so
        sweeps can report how close each bound comes to being tight.
        """
        sp = self.M.space
        s = self.S.values
        s_left = np.zeros_like(s)
        s_left[1:] = s[:-1]
        scale = max(1.0, float(np.max(np.abs(self.M.values))))

        recon = float(np.max(np.abs(self.M.values - self.L.values - self.K.values)))
        dL = np.linalg.norm(self.L.increments, axis=2)[1:]
        dK2 = np.linalg.norm(self.K2.increments, axis=2)[1:]
        var_k1 = np.linalg.norm(self.K1.increments, axis=2).sum(axis=0)
        # jumps below the tolerance count as zero, so rounding noise where
        # S_- = 0 does not turn into an infinite ratio
        live = dL > JUMP_TOL * scale
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio_L = np.where(live, dL / s_left[1:], 0.0)

        return {
            "reconstruction": recon <= IDENTITY_TOL * scale,
            "reconstruction_error": recon,
            "jump_bound_L": bool(np.all(dL <= 4 * s_left[1:] + JUMP_TOL * scale)),
            "max_jump_ratio_L": float(ratio_L.max()) if ratio_L.size else 0.0,
            "variation_K1": bool(np.all(var_k1 <= 2 * s[-1] * (1 + 1e-12) + JUMP_TOL * scale)),
            "jump_bound_K2": bool(np.all(dK2 <= 2 * s_left[1:] + JUMP_TOL * scale)),
            "L_martingale": is_martingale(self.L),
            "K_martingale": is_martingale(self.K),
        }

    def certified(self) -> bool:
        cert = self.certify()
        return all(v for k, v in cert.items() if isinstance(v, bool))

    def to_dict(self) -> dict:
        def vals(X):
            return X.values.tolist()

        cert = self.certify()
        return {
            "M": vals(self.M),
            "L": vals(self.L),
            "K": vals(self.K),
            "K1": vals(self.K1),
            "K2": vals(self.K2),
            "S": self.S.values.tolist(),
            "certificates": {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)) for k, v in cert.items()},
        }


def big_jumps(M: Process) -> Process:
    """``K1``: the jumps of ``M`` at least twice the previous maximal jump."""
    S = jump_maximal(M).values
    s_left = np.zeros_like(S)
    s_left[1:] = S[:-1]
    dM = M.increments
    keep = np.linalg.norm(dM, axis=2) >= 2 * s_left
    return Process(M.space, running_sum(dM * keep[:, :, None]), ADAPTED, check=False)


def davis_decompose(M: Process, tol: float = 1e-12) -> DavisDecomposition:
    if not is_martingale(M, tol):
        raise ValidationError("Davis' decomposition needs a martingale started at zero")
    K1 = big_jumps(M)
    K2 = compensator(K1).compensated
    K = K1 - K2
    L = M - K
    K = Process(M.space, K.values, ADAPTED, check=False)
    L = Process(M.space, L.values, ADAPTED, check=False)
    return DavisDecomposition(M, L, K, K1, K2, jump_maximal(M))


def check_jump_doubling(M: Process) -> bool:
    """Wherever ``||dM_n|| >= 2 S_{n-1}``, also ``||dM_n|| <= 2 (S_n - S_{n-1})``."""
    S = jump_maximal(M).values
    s_left = np.zeros_like(S)
    s_left[1:] = S[:-1]
    jumps = np.linalg.norm(M.increments, axis=2)
    big = jumps >= 2 * s_left
    scale = max(1.0, float(jumps.max()))
    return bool(np.all(jumps[big] <= 2 * (S[big] - s_left[big]) + 1e-12 * scale))


def variation(X: Process) -> np.ndarray:
    """Total variation ``sum_n ||dX_n||`` per atom."""
    return np.linalg.norm(X.increments, axis=2).sum(axis=0)


def check_dK_bound(M: Process, p: float, family: str = "", dec: DavisDecomposition | None = None) -> InequalityReport:
    """``|| var(K) ||_p <= c ||S_T||_p``.

    Scalar martingales use the Jordan-split route with ``c = 4(p + 1)``;
    vector martingales are covered only at ``p = 1`` with ``c = 4``.
    Each report carries the intermediate links of its route.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if M.dim > 1 and p != 1:
        raise UnsupportedError("the variation bound for vector K is only available at p = 1")
    dec = dec or davis_decompose(M)
    sp = M.space
    s_norm = sp.lp_norm(dec.S.terminal, p)
    lhs = sp.lp_norm(variation(dec.K), p)
    links = []
    if M.dim == 1:
        pos, neg = split_by_sign(dec.K1)
        pos_c, neg_c = compensator(pos).compensated, compensator(neg).compensated
        jordan = float(np.max(np.abs(pos_c.values + neg_c.values - dec.K2.values)))
        links.append(
            InequalityReport("dKS-jordan-consistency", p, jordan, 1.0, 1e-12 * max(1.0, float(np.max(np.abs(dec.K2.values)))), family)
        )
        for part, comp, tag in ((pos, pos_c, "+"), (neg, neg_c, "-")):
            v_part = sp.lp_norm(variation(part), p)
            links.append(InequalityReport(f"dKS-fv{tag}", p, sp.lp_norm(variation(comp), p), v_part, p, family))
            links.append(InequalityReport(f"dKS-K1{tag}-by-2S", p, v_part, s_norm, 2.0, family))
        constant = 4 * (p + 1)
    else:
        v_k1 = sp.lp_norm(variation(dec.K1), 1)
        links.append(InequalityReport("dK-K1-by-2S", 1.0, v_k1, s_norm, 2.0, family))
        links.append(InequalityReport("dK-compensator-l1", 1.0, sp.lp_norm(variation(dec.K2), 1), v_k1, 1.0, family))
        constant = 4.0
    return InequalityReport("dKS", p, lhs, s_norm, constant, family, links=links)
