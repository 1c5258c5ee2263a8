"""Dual predictable projections on finite spaces.

The compensator of an adapted ``V`` is the predictable process

    V~_0 = V_0,    V~_n = V~_{n-1} + E[dV_n | F_{n-1}],

so that ``V - V~`` is a martingale started at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StructuralError
from .prob_space import PREDICTABLE, RAW, Process, running_sum
from .reports import InequalityReport


@dataclass(frozen=True, eq=False)
class CompensatorPair:
    raw: Process
    compensated: Process
    martingale_part: Process


def compensator(V: Process) -> CompensatorPair:
    if V.kind == RAW:
        raise StructuralError("only adapted processes can be compensated")
    sp = V.space
    dV = V.increments
    drift = np.empty_like(dV)
    drift[0] = dV[0]
    for n in range(1, sp.horizon + 1):
        drift[n] = sp.expect_given(dV[n], n - 1)
    comp = Process(sp, running_sum(drift), PREDICTABLE, check=False)
    mart = Process(sp, V.values - comp.values, V.kind if V.kind != PREDICTABLE else PREDICTABLE, check=False)
    return CompensatorPair(V, comp, mart)


def split_by_sign(V: Process) -> tuple[Process, Process]:
    """Jordan split of a scalar process: ``V = V+ + V-``.

    ``V+`` collects the positive increments, ``V-`` the negative ones.
    """
    if V.dim != 1:
        raise StructuralError("sign splitting is defined for scalar processes")
    dV = V.increments
    pos = running_sum(np.where(dV > 0, dV, 0.0))
    neg = running_sum(np.where(dV < 0, dV, 0.0))
    return Process(V.space, pos, V.kind, check=False), Process(V.space, neg, V.kind, check=False)


def check_compensator_lp(V: Process, p: float, family: str = "") -> InequalityReport:
    """``||V~_T||_p <= p ||V_T||_p`` for an increasing scalar ``V`` with ``V_0 >= 0``."""
    if p < 1:
        raise DomainError("p must be >= 1")
    if V.dim != 1:
        raise StructuralError("V must be scalar")
    v = V.values[:, :, 0]
    if np.any(v[0] < 0) or np.any(np.diff(v, axis=0) < 0):
        raise DomainError("V must be increasing with V_0 >= 0")
    comp = compensator(V).compensated
    lhs = V.space.lp_norm(comp.terminal[:, 0], p)
    rhs = V.space.lp_norm(v[-1], p)
    return InequalityReport("compensator-lp", p, lhs, rhs, float(p), family)


def check_compensator_l1_hilbert(X: Process, family: str = "") -> InequalityReport:
    """``E sum ||dX~_n|| <= E sum ||dX_n||`` for a vector process."""
    comp = compensator(X).compensated
    var_comp = np.linalg.norm(comp.increments, axis=2).sum(axis=0)
    var_raw = np.linalg.norm(X.increments, axis=2).sum(axis=0)
    lhs = X.space.expectation(var_comp)
    rhs = X.space.expectation(var_raw)
    return InequalityReport("compensator-l1-hilbert", 1.0, lhs, rhs, 1.0, family)
