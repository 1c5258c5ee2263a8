"""Verification suites and the configuration that drives them.

Each suite turns a seeded ensemble into report rows.  Sweeps are
collapsed to their worst member per ``(name, p, family)`` so that a row
passes only if every member passed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Iterator

import numpy as np

from . import inequalities as ineq
from .calculus import (
    check_fv_rules,
    check_ibp,
    check_ito_remainder,
    fv_lemma_bounds,
    quadratic_variation,
    stoch_integral,
)
from .compensation import check_compensator_l1_hilbert, check_compensator_lp, compensator
from .davis import check_dK_bound, davis_decompose, variation
from .errors import ConfigError
from .montecarlo import (
    PathFamily,
    auxiliary_construction_check,
    bdg_mc_report,
    qv_error,
    simulate,
)
from .prob_space import (
    ADAPTED,
    PREDICTABLE,
    JumpLaw,
    MartingaleSpec,
    Process,
    StoppingTime,
    generate_martingale,
    martingale_defect,
    running_sum,
    stop_process,
)
from .reports import InequalityReport, worst

SUITES = ("fv-calculus", "compensator", "davis", "bdg-exact", "stein", "duality-interp", "bdg-mc")
FORMATS = ("csv", "json")

IDENTITY_TOL = 1e-10
FV_Q = (0.3, 0.5, 1.5, 3.0)
COMPENSATOR_P = (1.0, 1.5, 2.0, 4.0)
VEME_DIMS = (2, 3, 8)
DAVIS_P = (1.0, 2.0, 4.0)
BDG_P = (1.0, 1.5, 2.0, 3.0, 4.0)
DOOB_P = (1.5, 2.0, 4.0)
CONDITIONAL = (("clb1", 1.0), ("cub1", 1.0)) + tuple(
    (w, p) for w in ("clb2minus", "cub2minus") for p in (1.25, 1.5, 1.9)
) + (("clb2plus", 3.0), ("clb2plus", 4.0))
STEIN_P = (1.25, 1.5, 2.0, 3.0, 4.0)
STEIN_DIMS = (1, 3)
DUALITY_P = (1.25, 1.5, 3.0, 4.0)
INTERPOLATION = ((2.0, 4.0, 3.0), (1.5, 3.0, 2.0))
MC_P = (0.5, 1.0, 2.0, 3.0, 4.0)
MC_AUX = (("ub2c", 1.0), ("ub2c", 2.0), ("lb2c", 0.5), ("lb2c", 1.0), ("lbp_gt2", 3.0), ("lbp_gt2", 4.0))
QV_CONVERGENCE_TOL = 0.05


@dataclass
class ExperimentConfig:
    """Everything a run needs; round-trips through :meth:`to_dict`."""

    suites: list[str] = field(default_factory=lambda: list(SUITES))
    p_values: list[float] | None = None
    seed: int = 0
    output: str | None = None
    format: str = "csv"
    cap: float = ineq.DEFAULT_CAP
    n_martingales: int = 100
    n_chains: int = 20
    branchings: list[int] = field(default_factory=lambda: [2, 3])
    max_horizon: int = 6
    max_dim: int = 3
    jump_laws: list[str] = field(default_factory=lambda: [law.value for law in JumpLaw])
    martingales: list[dict] = field(default_factory=list)
    mc_paths: int = 2000
    mc_steps: int = 1000
    mc_dim: int = 1
    mc_families: list[dict] = field(default_factory=lambda: [{"name": "brownian"}, {"name": "compensated_poisson"}])
    eps_aux: float | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ConfigError(f"unknown suite(s) {unknown}; available: {list(SUITES)}")
        if not self.suites:
            raise ConfigError("no suites selected")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if not (isinstance(self.cap, (int, float)) and self.cap > 0):
            raise ConfigError("cap must be a positive number")
        if self.p_values is not None and (not self.p_values or any(not p > 0 for p in self.p_values)):
            raise ConfigError("p values must be positive")
        for name in ("n_martingales", "n_chains", "max_horizon", "max_dim", "mc_paths", "mc_steps", "mc_dim"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if not self.branchings or any(not isinstance(b, int) or b < 2 for b in self.branchings):
            raise ConfigError("branchings must be integers >= 2")
        try:
            for law in self.jump_laws:
                JumpLaw(law)
            for spec in self.martingales:
                MartingaleSpec(**spec)
            for fam in self.mc_families:
                PathFamily(**fam)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown configuration keys {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from exc
        return cls.from_dict(data)


# --- ensembles -----------------------------------------------------------------------


def suite_rng(config: ExperimentConfig, suite: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(SUITES.index(suite),)))


def tree_family(config: ExperimentConfig, dims: tuple[int, ...] | None = None, laws=None) -> str:
    b = ",".join(str(x) for x in config.branchings)
    d = ",".join(map(str, dims)) if dims else f"1..{config.max_dim}"
    laws = laws or config.jump_laws
    return f"tree(b={b};T<={config.max_horizon};d={d};laws={'+'.join(laws)})"


def sample_specs(
    rng: np.random.Generator,
    n: int,
    branchings,
    max_horizon: int,
    dims,
    laws,
) -> Iterator[MartingaleSpec]:
    """Random recipes: branching, horizon, dimension and law drawn uniformly."""
    for _ in range(n):
        yield MartingaleSpec(
            seed=int(rng.integers(2**63)),
            branching=int(rng.choice(branchings)),
            horizon=int(rng.integers(1, max_horizon + 1)),
            dim=int(rng.choice(dims)),
            jump_law=str(rng.choice(laws)),
            random_probs=bool(rng.integers(2)),
        )


def ensemble(config: ExperimentConfig, suite: str, dims=None, laws=None, n=None) -> Iterator[Process]:
    rng = suite_rng(config, suite)
    dims = dims or tuple(range(1, config.max_dim + 1))
    laws = laws or config.jump_laws
    for spec in config.martingales:
        yield generate_martingale(MartingaleSpec(**spec))[1]
    for spec in sample_specs(rng, n or config.n_martingales, config.branchings, config.max_horizon, dims, laws):
        yield generate_martingale(spec)[1]


def _p_list(config: ExperimentConfig, default, keep: Callable[[float], bool] = lambda p: True) -> list[float]:
    ps = config.p_values if config.p_values is not None else default
    return [float(p) for p in ps if keep(float(p))]


def residual_row(name: str, residual: float, tol: float, family: str, p: float = math.nan) -> InequalityReport:
    """An identity check: ``residual <= tol``."""
    return InequalityReport(name, p, residual, 1.0, tol, family)


def _collapse(rows: list[InequalityReport]) -> list[InequalityReport]:
    groups: dict[tuple, list] = {}
    for r in rows:
        key = (r.name, r.p if not math.isnan(r.p) else None, r.family)
        groups.setdefault(key, []).append(r)
    return [worst(g) for g in groups.values()]


# --- suites --------------------------------------------------------------------------


def predictable_weight(M: Process) -> Process:
    """``H_n = 1 / (1 + ||M_{n-1}||^2)``, a bounded predictable integrand."""
    left = M.left
    h = 1.0 / (1.0 + np.einsum("tad,tad->ta", left, left))
    return Process(M.space, h, PREDICTABLE, check=False)


def calculus_rows(M: Process, family: str, qs=FV_Q, ps=()) -> list[InequalityReport]:
    rows = []
    H = predictable_weight(M)
    N = stoch_integral(H, M)
    rows.append(residual_row("ibp", check_ibp(M, N), IDENTITY_TOL, family))
    U = Process(M.space, np.exp(M.values[:, :, :1]), ADAPTED, check=False)
    for rule, res in check_fv_rules(U).items():
        rows.append(residual_row(f"fv-{rule}", res, IDENTITY_TOL, family))
    qv_n = quadratic_variation(N).values
    qv_M = quadratic_variation(M)
    dM = M.increments
    sq = np.einsum("tad,tad->ta", dM, dM)
    weighted = running_sum(H.values[:, :, 0] ** 2 * sq)
    scale = max(1.0, float(np.max(np.abs(qv_n))))
    rows.append(residual_row("integral-qv", float(np.max(np.abs(qv_n - weighted))) / scale, IDENTITY_TOL, family))
    level = float(np.median(np.linalg.norm(M.terminal, axis=1)))
    tau = StoppingTime.hitting(M, level)
    stopped_qv = quadratic_variation(stop_process(M, tau)).values
    qv_stopped = stop_process(qv_M.as_process(), tau).values[:, :, 0]
    rows.append(residual_row("stopped-qv", float(np.max(np.abs(stopped_qv - qv_stopped))), 0.0, family))
    V = qv_M.as_process()
    for q in qs:
        res = fv_lemma_bounds(V, q)
        c = (q - 1) / q if q > 1 else (1 - q) / q
        rows.append(ineq.pathwise_report("fv-lemma", res.lhs, res.rhs / c, c, q, family))
    for p in ps:
        ito = check_ito_remainder(M, p)
        rows.append(ineq.pathwise_report("ito-remainder", ito.remainder, ito.bound, 1.0, p, family, tol=1e-10))
        rows.append(residual_row("ito-identity", ito.identity_residual, IDENTITY_TOL, family, p))
    return rows


def run_fv_calculus(config: ExperimentConfig) -> list[InequalityReport]:
    family = tree_family(config)
    ps = _p_list(config, (2.0, 3.0, 4.0), lambda p: p >= 2)
    rows = []
    for M in ensemble(config, "fv-calculus"):
        rows += calculus_rows(M, family, ps=ps)
    return _collapse(rows)


def run_compensator(config: ExperimentConfig) -> list[InequalityReport]:
    family = tree_family(config)
    ps = _p_list(config, COMPENSATOR_P, lambda p: p >= 1)
    rows = []
    for M in ensemble(config, "compensator"):
        for V in (quadratic_variation(M).as_process(), Process(M.space, running_sum(M.norms()), ADAPTED, check=False)):
            comp = compensator(V).compensated
            e_raw = float(M.space.expectation(V.terminal[:, 0]))
            e_comp = float(M.space.expectation(comp.terminal[:, 0]))
            rows.append(residual_row("compensator-mean", abs(e_raw - e_comp) / max(1.0, abs(e_raw)), IDENTITY_TOL, family))
            for p in ps:
                rows.append(check_compensator_lp(V, p, family))
    rng = suite_rng(config, "compensator")
    for d in VEME_DIMS:
        fam = tree_family(config, (d,))
        for spec in sample_specs(rng, max(1, config.n_martingales // len(VEME_DIMS)), config.branchings, config.max_horizon, (d,), config.jump_laws):
            M = generate_martingale(spec)[1]
            # an adapted finite-variation vector process: |dM| componentwise
            X = Process(M.space, running_sum(np.abs(M.increments)), ADAPTED, check=False)
            rows.append(check_compensator_l1_hilbert(X, fam))
            rows.append(check_compensator_l1_hilbert(M, fam))
    return _collapse(rows)


def davis_rows(M: Process, family: str, ps=DAVIS_P) -> list[InequalityReport]:
    dec = davis_decompose(M)
    cert = dec.certify()
    s = dec.S.values
    s_left = np.vstack([np.zeros((1, s.shape[1])), s[:-1]])
    rows = [
        residual_row("davis-reconstruction", cert["reconstruction_error"] / max(1.0, float(np.max(np.abs(M.values)))), 1e-12, family),
        InequalityReport("davis-jump-L", math.nan, cert["max_jump_ratio_L"], 1.0, 4.0, family),
        ineq.pathwise_report("davis-variation-K1", variation(dec.K1), s[-1], 2.0, math.nan, family),
        ineq.pathwise_report(
            "davis-jump-K2", np.linalg.norm(dec.K2.increments, axis=2)[1:], s_left[1:], 2.0, math.nan, family, tol=1e-10
        ),
        residual_row("davis-martingale-L", martingale_defect(dec.L) / max(1.0, float(np.max(np.abs(M.values)))), 1e-12, family),
        residual_row("davis-martingale-K", martingale_defect(dec.K) / max(1.0, float(np.max(np.abs(M.values)))), 1e-12, family),
    ]
    for p in ps:
        if M.dim == 1 or p == 1:
            rows.append(check_dK_bound(M, p, family, dec=dec))
    return rows


def run_davis(config: ExperimentConfig) -> list[InequalityReport]:
    ps = _p_list(config, DAVIS_P, lambda p: p >= 1)
    rows = []
    for law in config.jump_laws:
        family = tree_family(config, laws=[law])
        for M in ensemble(config, "davis", laws=[law], n=max(1, config.n_martingales // len(config.jump_laws))):
            for r in davis_rows(M, family, ps):
                if r.name == "dKS":
                    r.family = family + ("/scalar" if M.dim == 1 else "/vector")
                rows.append(r)
    return _collapse(rows)


def run_bdg_exact(config: ExperimentConfig) -> list[InequalityReport]:
    family = tree_family(config)
    ps = _p_list(config, BDG_P, lambda p: p >= 1)
    conditional = [(w, p) for w, p in CONDITIONAL if config.p_values is None or p in config.p_values]
    rows = []
    for i, M in enumerate(ensemble(config, "bdg-exact")):
        rows.append(residual_row("isometry", ineq.isometry_gap(M), IDENTITY_TOL, family, 2.0))
        for p in ps:
            for side in ("upper", "lower"):
                rows.append(ineq.bdg_report(M, p, side, config.cap, family))
                if i < config.n_chains:
                    rows.append(ineq.bdg_proof_chain(M, p, side, family))
        for p in DOOB_P:
            if config.p_values is None or p in config.p_values:
                sp = M.space
                rows.append(
                    InequalityReport("doob", p, sp.lp_norm(ineq.maximal(M).terminal, p), sp.lp_norm(M.terminal, p), ineq.conjugate(p), family)
                )
        rows.append(ineq.pathwise_report("S-by-qv", ineq.jump_maximal(M).terminal, np.sqrt(quadratic_variation(M).terminal), 1.0, math.nan, family))
        D = ineq.dominating_process(M)
        for which, p in conditional:
            rows.append(ineq.conditional_bound_report(M, D, p, which, family))
    return _collapse(rows)


def random_stein_instance(rng: np.random.Generator, config: ExperimentConfig, d: int):
    spec = next(sample_specs(rng, 1, config.branchings, config.max_horizon, (1,), config.jump_laws))
    space = generate_martingale(spec)[0]
    K = int(rng.integers(1, 2 * space.horizon + 2))
    scale = rng.exponential(1.0, size=(K, 1, 1))
    f = rng.standard_normal((K, space.n_atoms, d)) * scale
    if rng.random() < 0.5:
        # heavy-tailed values stress the non-Hilbertian exponents
        f = f * rng.pareto(1.5, size=(K, space.n_atoms, 1))
    n_idx = [int(x) for x in rng.integers(0, space.horizon + 1, size=K)]
    return space, f, n_idx


def run_stein(config: ExperimentConfig) -> list[InequalityReport]:
    ps = _p_list(config, STEIN_P, lambda p: 1 < p < math.inf)
    rng = suite_rng(config, "stein")
    rows = []
    for d in STEIN_DIMS:
        family = f"stein(d={d};T<={config.max_horizon})"
        for _ in range(config.n_martingales):
            space, f, n_idx = random_stein_instance(rng, config, d)
            for p in ps:
                rows.append(ineq.stein_report(space, f, n_idx, p, family))
    return _collapse(rows)


def run_duality_interp(config: ExperimentConfig) -> list[InequalityReport]:
    family = tree_family(config)
    ps = _p_list(config, DUALITY_P, lambda p: 1 < p < math.inf)
    members = list(ensemble(config, "duality-interp"))
    rows = []
    for M in members:
        for p in ps:
            rows.append(ineq.duality_lower_to_upper_check(M, p, family))
    for p1, p2, p in INTERPOLATION:
        rows.append(ineq.interpolation_lower_check(members, p1, p2, p, family))
    return _collapse(rows)


def mc_families(config: ExperimentConfig) -> list[PathFamily]:
    return [PathFamily(**f) for f in config.mc_families]


def run_bdg_mc(config: ExperimentConfig) -> list[InequalityReport]:
    ps = _p_list(config, MC_P, lambda p: p > 0)
    rows = []
    for i, fam in enumerate(mc_families(config)):
        ens = simulate(fam, config.mc_paths, config.mc_steps, config.mc_dim, seed=config.seed * 1000 + i)
        s = ens.summary
        for p in ps:
            if p < 1 and not fam.continuous:
                continue
            rows += bdg_mc_report(ens, p, config.cap).reports
        # isometry within MC error: E||X_1||^2 against E[X,X]_1
        diff = np.sum(s.terminal**2, axis=1) - s.qv
        se = float(diff.std(ddof=1) / math.sqrt(diff.size))
        rows.append(InequalityReport("mc-isometry", 2.0, abs(float(diff.mean())), 1.0, 0.0, fam.label, slack=3 * se))
        if fam.name == "brownian":
            err = qv_error(ens)
            rows.append(InequalityReport("mc-qv-convergence", math.nan, err.value, 1.0, QV_CONVERGENCE_TOL * ens.dim, fam.label))
            for which, p in MC_AUX:
                if config.p_values is not None and p not in config.p_values:
                    continue
                rows.append(auxiliary_construction_check(ens, p, which, config.eps_aux).report)
    return rows


RUNNERS: dict[str, Callable[[ExperimentConfig], list[InequalityReport]]] = {
    "fv-calculus": run_fv_calculus,
    "compensator": run_compensator,
    "davis": run_davis,
    "bdg-exact": run_bdg_exact,
    "stein": run_stein,
    "duality-interp": run_duality_interp,
    "bdg-mc": run_bdg_mc,
}


def run_suites(config: ExperimentConfig) -> list[InequalityReport]:
    rows = []
    for name in config.suites:
        rows += RUNNERS[name](config)
    return rows
