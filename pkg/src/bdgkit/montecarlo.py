"""Path ensembles approximating continuous-time martingales on ``[0, 1]``.

Paths are never stored in full unless asked for: an ensemble is a
recipe that regenerates its paths chunk by chunk, each chunk drawing
from its own ``SeedSequence`` child so that results do not depend on
how the chunks are consumed.  Normals come from numpy's ``PCG64``
bit generator with the ziggurat sampler of ``Generator.standard_normal``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator

import numpy as np
from scipy import stats

from .errors import CapacityError, DomainError
from .reports import InequalityReport

GAUSSIAN_ALGORITHM = "numpy-PCG64-ziggurat"
CHUNK_PATHS = 256
# hard limit on n_paths * n_steps * dim; larger ensembles are refused
SAMPLE_CAP = 10**10
# paths are only materialised below this many floats
MATERIALIZE_CAP = 5 * 10**7
EPS_AUX = 1e-6
MC_SIGMAS = 3.0
REQUIRED_FRACTION = 0.99
QV_MATCH_TOL = 0.05
DEFAULT_CAP = 64.0

FAMILIES = ("brownian", "compensated_poisson", "stable_truncated")


@dataclass(frozen=True)
class PathFamily:
    """Increment law; ``rate`` is used by Poisson, ``alpha`` and ``cap`` by stable."""

    name: str = "brownian"
    rate: float = 1.0
    alpha: float = 1.5
    cap: float = 10.0

    def __post_init__(self):
        if self.name not in FAMILIES:
            raise DomainError(f"unknown path family {self.name!r}; expected one of {FAMILIES}")
        if not self.rate > 0:
            raise DomainError("rate must be positive")
        if not 0 < self.alpha <= 2:
            raise DomainError("alpha must lie in (0, 2]")
        if not self.cap > 0:
            raise DomainError("cap must be positive")

    @property
    def continuous(self) -> bool:
        return self.name == "brownian"

    @property
    def label(self) -> str:
        if self.name == "compensated_poisson":
            return f"compensated_poisson(rate={self.rate:g})"
        if self.name == "stable_truncated":
            return f"stable_truncated(alpha={self.alpha:g},cap={self.cap:g})"
        return self.name

    def to_dict(self) -> dict:
        return {"name": self.name, "rate": self.rate, "alpha": self.alpha, "cap": self.cap}

    def increments(self, rng: np.random.Generator, shape: tuple, dt: float) -> np.ndarray:
        if self.name == "brownian":
            return rng.standard_normal(shape) * math.sqrt(dt)
        if self.name == "compensated_poisson":
            return rng.poisson(self.rate * dt, size=shape) - self.rate * dt
        # symmetric, so symmetric truncation keeps the mean at zero
        z = stats.levy_stable.rvs(self.alpha, 0.0, size=shape, random_state=rng)
        return np.clip(z * dt ** (1 / self.alpha), -self.cap, self.cap)


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n: int

    @classmethod
    def of(cls, samples: np.ndarray) -> "McEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        return cls(float(samples.mean()), se, n)


@dataclass(frozen=True)
class PathSummary:
    """Per-path functionals of an ensemble."""

    sup_norm: np.ndarray
    qv: np.ndarray
    terminal: np.ndarray


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    family: PathFamily
    n_paths: int
    n_steps: int
    dim: int = 1
    seed: int = 0
    chunk_paths: int = field(default=CHUNK_PATHS, repr=False)

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1 or self.dim < 1:
            raise DomainError("n_paths, n_steps and dim must be positive")
        size = self.n_paths * self.n_steps * self.dim
        if size > SAMPLE_CAP:
            raise CapacityError(f"{size} samples exceeds the cap {SAMPLE_CAP}")

    @property
    def dt(self) -> float:
        return 1.0 / self.n_steps

    def _chunk_bounds(self) -> list[tuple[int, int]]:
        return [(s, min(s + self.chunk_paths, self.n_paths)) for s in range(0, self.n_paths, self.chunk_paths)]

    def chunk_increments(self, index: int) -> np.ndarray:
        """Increments of chunk ``index`` with shape ``(paths, n_steps, dim)``."""
        start, stop = self._chunk_bounds()[index]
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(index,))))
        return self.family.increments(rng, (stop - start, self.n_steps, self.dim), self.dt)

    def iter_increments(self) -> Iterator[np.ndarray]:
        for i in range(len(self._chunk_bounds())):
            yield self.chunk_increments(i)

    def map_chunks(self, fn: Callable[[np.ndarray], dict]) -> dict:
        """Apply ``fn`` to each chunk of increments and concatenate the per-path outputs."""
        parts: dict[str, list] = {}
        for inc in self.iter_increments():
            for key, val in fn(inc).items():
                parts.setdefault(key, []).append(val)
        return {k: np.concatenate(v) for k, v in parts.items()}

    @property
    def paths(self) -> np.ndarray:
        """All paths, shape ``(n_paths, n_steps + 1, dim)``, starting at 0."""
        size = self.n_paths * (self.n_steps + 1) * self.dim
        if size > MATERIALIZE_CAP:
            raise CapacityError(f"materialising {size} floats exceeds {MATERIALIZE_CAP}; stream with map_chunks")
        inc = np.concatenate(list(self.iter_increments()))
        out = np.zeros((self.n_paths, self.n_steps + 1, self.dim))
        np.cumsum(inc, axis=1, out=out[:, 1:])
        return out

    @cached_property
    def summary(self) -> PathSummary:
        def fn(inc):
            X = np.cumsum(inc, axis=1)
            norms = np.linalg.norm(X, axis=2)
            return {
                "sup": norms.max(axis=1),
                "qv": np.einsum("psd,psd->p", inc, inc),
                "terminal": X[:, -1, :],
            }

        out = self.map_chunks(fn)
        return PathSummary(out["sup"], out["qv"], out["terminal"])

    def to_dict(self) -> dict:
        return {
            "family": self.family.to_dict(),
            "n_paths": self.n_paths,
            "n_steps": self.n_steps,
            "dim": self.dim,
            "seed": self.seed,
        }


def simulate(family, n_paths: int, n_steps: int, dim: int = 1, seed: int = 0) -> PathEnsemble:
    if isinstance(family, str):
        family = PathFamily(family)
    return PathEnsemble(family, n_paths, n_steps, dim, seed)


# --- BDG on ensembles -------------------------------------------------------------------


def mc_constants(family: PathFamily, p: float) -> tuple[float | None, float | None]:
    """Tracked ``(upper, lower)`` constants on ``L_p`` norms.

    Continuous paths: upper ``4 sqrt(2/p)`` for ``p <= 2``, lower ``2/p``
    for ``p < 2`` and ``sqrt(2p)`` for ``p > 2``.  At ``p = 2`` Doob and
    the isometry give 2 and 1 for every family.  ``None`` means the cap.
    """
    if p == 2:
        return 2.0, 1.0
    if not family.continuous:
        return None, None
    upper = 4 * math.sqrt(2 / p) if p < 2 else None
    lower = 2 / p if p < 2 else math.sqrt(2 * p)
    return upper, lower


def _norm_gap(a: np.ndarray, b: np.ndarray, c: float, p: float) -> tuple[float, float, float, float]:
    """``(E a)^{1/p}``, ``(E b)^{1/p}`` and the standard error of ``(E a)^{1/p} - c (E b)^{1/p}``."""
    n = a.size
    ma, mb = float(a.mean()), float(b.mean())
    la, lb = ma ** (1 / p), mb ** (1 / p)
    ga = la / (p * ma) if ma > 0 else 0.0
    gb = -c * lb / (p * mb) if mb > 0 else 0.0
    cov = np.cov(np.stack([a, b])) if n > 1 else np.zeros((2, 2))
    var = ga * ga * cov[0, 0] + 2 * ga * gb * cov[0, 1] + gb * gb * cov[1, 1]
    return la, lb, math.sqrt(max(var, 0.0) / n), float(np.std(a, ddof=1) / math.sqrt(n)) if n > 1 else math.inf


@dataclass
class McBdgResult:
    upper: InequalityReport
    lower: InequalityReport
    sup_moment: McEstimate
    qv_moment: McEstimate

    @property
    def reports(self) -> list[InequalityReport]:
        return [self.upper, self.lower]


def bdg_mc_report(ens: PathEnsemble, p: float, cap: float = DEFAULT_CAP, sigmas: float = MC_SIGMAS) -> McBdgResult:
    """Both BDG inequalities on an ensemble, in ``L_p`` norms.

    ``lhs`` of the upper report is ``(E (sup ||X||)^p)^{1/p}``, ``rhs`` is
    ``(E [X,X]^{p/2})^{1/p}``; the lower report swaps them.  Each report
    may exceed its constant by ``sigmas`` standard errors of the paired
    difference.  The raw moments are returned as :class:`McEstimate`.
    """
    if not p > 0:
        raise DomainError("p must be positive")
    if p < 1 and not ens.family.continuous:
        raise DomainError("0 < p < 1 is covered for continuous martingales only")
    s = ens.summary
    a = s.sup_norm**p
    b = s.qv ** (p / 2)
    c_up, c_low = mc_constants(ens.family, p)
    family = ens.family.label

    def report(name, x, y, c):
        eff = c if c is not None else cap
        lx, ly, se, _ = _norm_gap(x, y, eff, p)
        return InequalityReport(name, p, lx, ly, c, family, cap=cap, slack=sigmas * se)

    return McBdgResult(
        report("mc-bdg-upper", a, b, c_up),
        report("mc-bdg-lower", b, a, c_low),
        McEstimate.of(a),
        McEstimate.of(b),
    )


def qv_error(ens: PathEnsemble) -> McEstimate:
    """``E |[X,X]_1 - 1|`` per coordinate, for unit-variance families."""
    return McEstimate.of(np.abs(ens.summary.qv / ens.dim - 1.0))


# --- discretised auxiliary constructions ------------------------------------------------


@dataclass
class AuxiliaryResult:
    report: InequalityReport
    pass_fraction: float
    max_slack: float
    n_paths: int


AUX_RANGES = {"ub2c": (0.0, 2.0), "lb2c": (0.0, 2.0), "lbp_gt2": (2.0, math.inf)}


def _aux_chunk(inc: np.ndarray, p: float, which: str, eps: float) -> dict:
    X = np.cumsum(inc, axis=1)
    norms = np.linalg.norm(X, axis=2)
    sq = np.einsum("psd,psd->ps", inc, inc)
    qv = np.cumsum(sq, axis=1)
    mstar = np.maximum.accumulate(norms, axis=1)
    if which == "lb2c":
        H = (eps + mstar) ** (p / 2 - 1)
        h0 = eps ** (p / 2 - 1)
    else:
        H = math.sqrt(p / 2) * (eps + qv) ** (p / 4 - 0.5)
        h0 = math.sqrt(p / 2) * eps ** (p / 4 - 0.5)
    # integrand evaluated at the left point of each step; X starts at 0
    H_left = np.concatenate([np.full((X.shape[0], 1), h0), H[:, :-1]], axis=1)
    dN = H_left[:, :, None] * inc
    N = np.cumsum(dN, axis=1)
    nstar = np.linalg.norm(N, axis=2).max(axis=1)
    m_T, H_T = mstar[:, -1], H[:, -1]
    if which == "ub2c":
        slack = m_T - 2 * nstar / H_T
        ok = slack <= 1e-12 * np.maximum(1.0, m_T)
    elif which == "lb2c":
        slack = nstar - (2 / p) * (eps + m_T) ** (p / 2)
        ok = slack <= 0
    else:
        qv_n = np.einsum("ps,ps->p", H_left**2, sq)
        target = (eps + qv[:, -1]) ** (p / 2) - eps ** (p / 2)
        rel = np.abs(qv_n - target) / np.maximum(target, np.finfo(float).tiny)
        bound = nstar - 2 * H_T * m_T
        slack = np.maximum(rel - QV_MATCH_TOL, bound)
        ok = (rel <= QV_MATCH_TOL) & (bound <= 1e-12 * np.maximum(1.0, H_T * m_T))
    return {"ok": ok, "slack": slack}


def default_eps(ens: PathEnsemble, which: str) -> float:
    """``EPS_AUX``, except ``lb2c`` which uses ``100 dt``.

    The ``lb2c`` integrand starts at ``eps^{p/2-1}`` and multiplies the
    first increment before ``M*`` has moved, so a left-point sum only
    tracks the continuous bound once ``eps`` dominates the step size.
    """
    return max(EPS_AUX, 100 * ens.dt) if which == "lb2c" else EPS_AUX


def auxiliary_construction_check(ens: PathEnsemble, p: float, which: str, eps: float | None = None) -> AuxiliaryResult:
    """Pathwise inequalities of the auxiliary martingale ``N = H . M``.

    ``ub2c``: ``H = sqrt(p/2)(eps + [M,M])^{p/4-1/2}`` and
    ``M* <= 2 N* / H_T``.  ``lb2c``: ``H = (eps + M*)^{p/2-1}`` and
    ``N* <= (2/p)(eps + M*)^{p/2}``.  ``lbp_gt2``: the ``ub2c`` integrand
    with ``[N,N] = (eps + [M,M])^{p/2} - eps^{p/2}`` to relative error
    ``QV_MATCH_TOL`` and ``N* <= 2 H_T M*``.

    The integrals use left-point sums, so the continuous-time statements
    hold only approximately; the report passes when at least 99% of
    paths satisfy them.  ``lhs`` is the required fraction and ``rhs`` the
    observed one.
    """
    if which not in AUX_RANGES:
        raise DomainError(f"unknown construction {which!r}; expected one of {tuple(AUX_RANGES)}")
    lo, hi = AUX_RANGES[which]
    if not (lo < p <= hi if which == "ub2c" else lo < p < hi):
        raise DomainError(f"{which} needs p in ({lo}, {hi}{']' if which == 'ub2c' else ')'}, got {p}")
    if eps is None:
        eps = default_eps(ens, which)
    if not eps > 0:
        raise DomainError("eps must be positive")
    out = ens.map_chunks(lambda inc: _aux_chunk(inc, p, which, eps))
    frac = float(out["ok"].mean())
    report = InequalityReport(f"aux-{which}", p, REQUIRED_FRACTION, frac, 1.0, ens.family.label)
    return AuxiliaryResult(report, frac, float(out["slack"].max()), ens.n_paths)


def aux_eps_sweep(ens: PathEnsemble, p: float, which: str, eps_values) -> list[AuxiliaryResult]:
    """:func:`auxiliary_construction_check` for each ``eps``; the reports are named by ``eps``."""
    out = []
    for eps in eps_values:
        res = auxiliary_construction_check(ens, p, which, eps)
        res.report.name = f"aux-{which}[eps={eps:g}]"
        out.append(res)
    return out
