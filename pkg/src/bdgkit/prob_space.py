"""Finite filtered probability spaces and processes living on them.

A :class:`FilteredSpace` is a finite set of atoms with positive
probabilities and an increasing sequence of partitions indexed by
``0..T``.  Every block partition is stored as an integer label array, so
conditional expectations reduce to weighted block averages.

Processes are arrays of shape ``(T + 1, n_atoms, d)``.  Discrete time
stands in for cadlag time: the left limit of ``X`` at ``n`` is
``X[n - 1]`` and the jump is ``X[n] - X[n - 1]``, with ``X[-1] := 0`` so
that the jump at time zero is ``X[0]`` itself.
"""

from __future__ import annotations

import enum
from dataclasses import InitVar, dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import CapacityError, DomainError, StructuralError, ValidationError

PROB_TOL = 1e-12
DEFAULT_ATOM_CAP = 2**20

ADAPTED = "adapted"
PREDICTABLE = "predictable"
RAW = "raw"
_KINDS = (ADAPTED, PREDICTABLE, RAW)


def running_sum(a) -> np.ndarray:
    """``np.cumsum(a, axis=0)``, one time slice at a time.

    Same summation order, so the result is bit-identical; for the short,
    wide arrays used here it is several times faster.
    """
    out = np.array(a, dtype=float)
    for t in range(1, out.shape[0]):
        out[t] += out[t - 1]
    return out


@lru_cache(maxsize=64)
def _tree_labels(branching: int, horizon: int) -> np.ndarray:
    atoms = np.arange(branching**horizon)
    labels = np.stack([atoms // branching ** (horizon - n) for n in range(horizon + 1)])
    labels.setflags(write=False)
    return labels


def _is_sorted_canonical(row: np.ndarray) -> bool:
    step = np.diff(row)
    return row[0] == 0 and bool(np.all((step == 0) | (step == 1)))


def _relabel(row: np.ndarray) -> np.ndarray:
    # block ids become 0..nb-1 in order of first appearance
    if row.dtype.kind in "iu" and _is_sorted_canonical(row):
        return row.astype(np.int64, copy=False)
    _, first, inverse = np.unique(row, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse].astype(np.int64)


@dataclass(frozen=True, eq=False)
class FilteredSpace:
    """Finite outcome set with a refining filtration.

    ``labels[n, i]`` is the index of the block of ``partitions[n]`` that
    contains atom ``i``.  Use :meth:`from_partitions` to build a space
    from explicit block lists.
    """

    probs: np.ndarray
    labels: np.ndarray
    outcomes: tuple = ()

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).copy()
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.shape[1] != probs.shape[0] or probs.ndim != 1:
            raise StructuralError(
                f"labels must have shape (T+1, {probs.shape[0]}), got {labels.shape}"
            )
        if labels.shape[0] < 2:
            raise StructuralError("horizon must be at least 1")
        if np.any(probs <= 0) or not np.all(np.isfinite(probs)):
            raise ValidationError("atom probabilities must be finite and positive")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValidationError(f"probabilities sum to {probs.sum()!r}, not 1")
        labels = np.stack([_relabel(row) for row in labels])
        if labels[0].max() != 0:
            raise ValidationError("partitions[0] must be the trivial partition")
        for n in range(labels.shape[0] - 1):
            if _is_sorted_canonical(labels[n]) and _is_sorted_canonical(labels[n + 1]):
                # contiguous blocks: every cut of row n must also cut row n + 1
                if np.any(np.diff(labels[n]) > np.diff(labels[n + 1])):
                    raise ValidationError(f"partitions[{n + 1}] does not refine partitions[{n}]")
                continue
            pairs = np.unique(labels[n + 1] * (labels[n].max() + 1) + labels[n])
            if pairs.size != labels[n + 1].max() + 1:
                raise ValidationError(f"partitions[{n + 1}] does not refine partitions[{n}]")
        outcomes = tuple(self.outcomes) if self.outcomes else tuple(range(probs.size))
        if len(outcomes) != probs.size:
            raise StructuralError("one outcome identifier per atom is required")
        probs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "outcomes", outcomes)

    @classmethod
    def from_partitions(
        cls,
        partitions: Sequence[Sequence[Sequence[int]]],
        probs: Sequence[float],
        outcomes: Sequence | None = None,
    ) -> "FilteredSpace":
        """Build a space from block lists of atom indices.

        Atoms with probability zero are pruned before validation.
        """
        probs = np.asarray(probs, dtype=float)
        n_atoms = probs.size
        labels = np.full((len(partitions), n_atoms), -1, dtype=np.int64)
        for n, blocks in enumerate(partitions):
            for b, block in enumerate(blocks):
                idx = np.asarray(list(block), dtype=np.int64)
                if idx.size and (idx.min() < 0 or idx.max() >= n_atoms):
                    raise StructuralError(f"partitions[{n}] refers to an unknown atom")
                if np.any(labels[n, idx] >= 0):
                    raise ValidationError(f"partitions[{n}] has overlapping blocks")
                labels[n, idx] = b
            if np.any(labels[n] < 0):
                raise ValidationError(f"partitions[{n}] does not cover every atom")
        if np.any(probs < 0):
            raise ValidationError("negative probability")
        keep = probs > 0
        outcomes = list(outcomes) if outcomes is not None else list(range(n_atoms))
        outcomes = [o for o, k in zip(outcomes, keep) if k]
        return cls(probs[keep], labels[:, keep], tuple(outcomes))

    @classmethod
    def tree(
        cls,
        branching: int,
        horizon: int,
        probs: np.ndarray | None = None,
        atom_cap: int = DEFAULT_ATOM_CAP,
    ) -> "FilteredSpace":
        """Uniform ``branching``-ary tree of depth ``horizon``; leaves are atoms."""
        if branching < 2 or horizon < 1:
            raise DomainError("a tree needs branching >= 2 and horizon >= 1")
        n_atoms = branching**horizon
        if n_atoms > atom_cap:
            raise CapacityError(f"{branching}^{horizon} = {n_atoms} atoms exceeds cap {atom_cap}")
        labels = _tree_labels(branching, horizon)
        if probs is None:
            probs = np.full(n_atoms, 1.0 / n_atoms)
        return cls(probs, labels)

    @classmethod
    def revealed(cls, n_atoms: int, horizon: int, probs: np.ndarray | None = None) -> "FilteredSpace":
        """Space where the whole outcome is revealed at time 1.

        Any process with a deterministic value at time zero is adapted
        here, which makes it the natural home for pathwise sweeps.
        """
        if probs is None:
            probs = np.full(n_atoms, 1.0 / n_atoms)
        atoms = np.arange(n_atoms)
        labels = np.vstack([np.zeros(n_atoms, dtype=np.int64)] + [atoms] * horizon)
        return cls(probs, labels)

    @property
    def horizon(self) -> int:
        return self.labels.shape[0] - 1

    @property
    def n_atoms(self) -> int:
        return self.probs.size

    def n_blocks(self, n: int) -> int:
        return int(self.labels[n].max()) + 1

    @property
    def partitions(self) -> list[list[list[int]]]:
        out = []
        for row in self.labels:
            blocks: list[list[int]] = [[] for _ in range(int(row.max()) + 1)]
            for atom, b in enumerate(row):
                blocks[b].append(atom)
            out.append(blocks)
        return out

    @cached_property
    def _indicators(self) -> list:
        mats = []
        for row in self.labels:
            nb = int(row.max()) + 1
            mats.append(
                sparse.csr_matrix(
                    (np.ones(row.size), (row, np.arange(row.size))), shape=(nb, row.size)
                )
            )
        return mats

    @cached_property
    def _block_probs(self) -> list[np.ndarray]:
        return [m @ self.probs for m in self._indicators]

    @cached_property
    def _first_atoms(self) -> list[np.ndarray]:
        out = []
        for row in self.labels:
            first = np.full(int(row.max()) + 1, -1)
            first[row[::-1]] = np.arange(row.size)[::-1]
            out.append(first)
        return out

    def _check_level(self, n: int) -> None:
        if not 0 <= n <= self.horizon:
            raise StructuralError(f"time index {n} outside 0..{self.horizon}")

    def expect_given(self, values, n: int) -> np.ndarray:
        """Conditional expectation given ``F_n`` of an atom-indexed array.

        ``values`` has the atom axis first; trailing axes are carried
        through.  The result has the same shape and is constant on every
        block of ``partitions[n]``.
        """
        self._check_level(n)
        a = np.asarray(values, dtype=float)
        if a.shape[0] != self.n_atoms:
            raise StructuralError(f"expected {self.n_atoms} atoms, got {a.shape[0]}")
        flat = a.reshape(self.n_atoms, -1)
        sums = self._indicators[n] @ (self.probs[:, None] * flat)
        means = sums / self._block_probs[n][:, None]
        return means[self.labels[n]].reshape(a.shape)

    def expectation(self, values) -> np.ndarray | float:
        a = np.asarray(values, dtype=float)
        if a.shape[0] != self.n_atoms:
            raise StructuralError(f"expected {self.n_atoms} atoms, got {a.shape[0]}")
        out = np.tensordot(self.probs, a, axes=(0, 0))
        return float(out) if np.ndim(out) == 0 else out

    def lp_norm(self, values, p: float) -> float:
        """``(E ||X||^p)^{1/p}``; a quasi-norm when ``p < 1``."""
        if not p > 0:
            raise DomainError("p must be positive")
        a = np.asarray(values, dtype=float)
        if a.shape[0] != self.n_atoms:
            raise StructuralError(f"expected {self.n_atoms} atoms, got {a.shape[0]}")
        mag = np.linalg.norm(a.reshape(a.shape[0], -1), axis=1) if a.ndim > 1 else np.abs(a)
        if p == np.inf:
            return float(mag.max())
        return float(self.expectation(mag**p) ** (1.0 / p))

    def measurability_gap(self, values, n: int) -> float:
        """Largest deviation of ``values`` from being constant on blocks of ``F_n``."""
        self._check_level(n)
        a = np.asarray(values, dtype=float)
        rep = a[self._first_atoms[n][self.labels[n]]]
        return float(np.max(np.abs(a - rep))) if a.size else 0.0

    def is_measurable(self, values, n: int, tol: float = PROB_TOL) -> bool:
        a = np.asarray(values, dtype=float)
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        return self.measurability_gap(a, n) <= tol * scale


@dataclass(frozen=True, eq=False)
class Process:
    """Time- and atom-indexed array of vectors in ``R^d``.

    ``values`` has shape ``(T + 1, n_atoms, d)``; a 2-D array is read as a
    scalar process.  With ``check=True`` the measurability implied by
    ``kind`` is verified on construction.
    """

    space: FilteredSpace
    values: np.ndarray
    kind: str = ADAPTED
    check: InitVar[bool] = True

    def __post_init__(self, check):
        # a read-only view avoids copying without freezing the caller's array
        v = np.asarray(self.values, dtype=float).view()
        if v.ndim == 2:
            v = v[:, :, None]
        T, n = self.space.horizon, self.space.n_atoms
        if v.ndim != 3 or v.shape[:2] != (T + 1, n) or v.shape[2] < 1:
            raise StructuralError(f"process values must have shape ({T + 1}, {n}, d), got {v.shape}")
        if self.kind not in _KINDS:
            raise StructuralError(f"unknown process kind {self.kind!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if check and self.kind != RAW:
            self._check_measurable()

    def _check_measurable(self) -> None:
        sp = self.space
        for n in range(sp.horizon + 1):
            level = n if self.kind == ADAPTED else max(n - 1, 0)
            if not sp.is_measurable(self.values[n], level):
                raise ValidationError(
                    f"{self.kind} process is not measurable w.r.t. partitions[{level}] at time {n}"
                )

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def horizon(self) -> int:
        return self.space.horizon

    @property
    def terminal(self) -> np.ndarray:
        return self.values[-1]

    @cached_property
    def left(self) -> np.ndarray:
        """``X_{n-}`` for every ``n``, with ``X_{0-} := 0``."""
        out = np.zeros_like(self.values)
        out[1:] = self.values[:-1]
        return out

    @cached_property
    def increments(self) -> np.ndarray:
        """``dX_n = X_n - X_{n-1}``; ``dX_0 = X_0``."""
        out = self.values.copy()
        out[1:] -= self.values[:-1]
        return out

    def norms(self) -> np.ndarray:
        v = self.values
        return np.sqrt(np.einsum("tad,tad->ta", v, v))

    def coord(self, j: int) -> "Process":
        return Process(self.space, self.values[:, :, j : j + 1], self.kind, check=False)

    def _combine(self, other, op) -> "Process":
        if isinstance(other, Process):
            if other.space is not self.space:
                raise StructuralError("processes live on different spaces")
            if other.dim != self.dim and 1 not in (other.dim, self.dim):
                raise StructuralError(f"dimension mismatch {self.dim} vs {other.dim}")
            kind = self.kind if self.kind == other.kind else (
                RAW if RAW in (self.kind, other.kind) else ADAPTED
            )
            return Process(self.space, op(self.values, other.values), kind, check=False)
        return Process(self.space, op(self.values, float(other)), self.kind, check=False)

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: b - a)

    def __mul__(self, other):
        if isinstance(other, Process):
            raise StructuralError("use stoch_integral for products with processes")
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return Process(self.space, -self.values, self.kind, check=False)


def constant_process(space: FilteredSpace, value, dim: int | None = None) -> Process:
    value = np.atleast_1d(np.asarray(value, dtype=float))
    if dim is not None and value.size == 1:
        value = np.repeat(value, dim)
    vals = np.broadcast_to(value, (space.horizon + 1, space.n_atoms, value.size))
    return Process(space, vals, PREDICTABLE, check=False)


@dataclass(frozen=True, eq=False)
class StoppingTime:
    """Atom-indexed stopping time with values in ``0..T``."""

    space: FilteredSpace
    tau: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check):
        tau = np.asarray(self.tau)
        if tau.shape != (self.space.n_atoms,) or not np.issubdtype(tau.dtype, np.integer):
            raise StructuralError("tau must be an integer array with one entry per atom")
        if tau.min() < 0 or tau.max() > self.space.horizon:
            raise ValidationError("tau must take values in 0..T")
        for n in range(self.space.horizon + 1 if check else 0):
            if not self.space.is_measurable((tau <= n).astype(float), n, tol=0.0):
                raise ValidationError(f"{{tau <= {n}}} is not an F_{n} event")
        tau = tau.astype(np.int64)
        tau.setflags(write=False)
        object.__setattr__(self, "tau", tau)

    @classmethod
    def constant(cls, space: FilteredSpace, n: int) -> "StoppingTime":
        return cls(space, np.full(space.n_atoms, n, dtype=np.int64))

    @classmethod
    def hitting(cls, X: Process, level: float) -> "StoppingTime":
        """First time ``||X_n|| >= level``; ``T`` if the level is never reached."""
        hit = X.norms() >= level
        tau = np.where(hit.any(axis=0), hit.argmax(axis=0), X.horizon)
        # a first entry time of an adapted process needs no re-check
        return cls(X.space, tau.astype(np.int64), check=X.kind == RAW)


def cond_expect(X: Process, n: int) -> Process:
    """``E[X_t | F_n]`` for every time slice ``t``."""
    sp = X.space
    moved = np.moveaxis(X.values, 1, 0)
    out = np.moveaxis(sp.expect_given(moved, n), 0, 1)
    return Process(sp, out, RAW, check=False)


def martingale_defect(M: Process) -> float:
    """Largest norm of ``E[dM_n | F_{n-1}]`` over ``n >= 1``, together with ``||M_0||``."""
    sp = M.space
    worst = float(np.max(np.linalg.norm(M.values[0], axis=-1)))
    dM = M.increments
    for n in range(1, sp.horizon + 1):
        drift = sp.expect_given(dM[n], n - 1)
        worst = max(worst, float(np.max(np.linalg.norm(drift, axis=-1))))
    return worst


def is_martingale(M: Process, tol: float = 1e-12) -> bool:
    """Adapted, starts at zero, and has conditionally centred increments.

    ``tol`` is relative to ``max(1, max |M|)`` so heavy-tailed paths are
    judged on the same footing as unit-size walks.
    """
    if M.kind == RAW:
        return False
    scale = max(1.0, float(np.max(np.abs(M.values))))
    if M.kind == PREDICTABLE or all(
        M.space.is_measurable(M.values[n], n) for n in range(M.horizon + 1)
    ):
        return martingale_defect(M) <= tol * scale
    return False


def stop_process(X: Process, tau: StoppingTime) -> Process:
    """The stopped process ``X^tau_n = X_{min(n, tau)}``."""
    if tau.space is not X.space:
        raise StructuralError("stopping time and process live on different spaces")
    if X.kind == RAW:
        raise ValidationError("only adapted processes can be stopped")
    times = np.minimum(np.arange(X.horizon + 1)[:, None], tau.tau[None, :])
    vals = X.values[times, np.arange(X.space.n_atoms)[None, :]]
    return Process(X.space, vals, ADAPTED, check=False)


class JumpLaw(str, enum.Enum):
    RADEMACHER = "rademacher"
    CENTERED_UNIFORM = "centered_uniform"
    HEAVY_TAIL_TRUNCATED = "heavy_tail_truncated"
    POISSON_COMPENSATED = "poisson_compensated"


# parameters of the non-trivial jump laws
HEAVY_TAIL_DF = 1.5
HEAVY_TAIL_CAP = 50.0
POISSON_RATE = 1.0


@dataclass(frozen=True)
class MartingaleSpec:
    """Recipe for a random martingale on a uniform tree filtration."""

    seed: int
    branching: int = 2
    horizon: int = 3
    dim: int = 1
    jump_law: JumpLaw = JumpLaw.RADEMACHER
    scale: float = 1.0
    random_probs: bool = False
    atom_cap: int = DEFAULT_ATOM_CAP

    def __post_init__(self):
        object.__setattr__(self, "jump_law", JumpLaw(self.jump_law))
        if self.branching < 2:
            raise DomainError("branching must be >= 2")
        if self.horizon < 1:
            raise DomainError("horizon must be >= 1")
        if self.dim < 1:
            raise DomainError("dim must be >= 1")
        if not self.scale > 0:
            raise DomainError("scale must be positive")

    @property
    def n_atoms(self) -> int:
        return self.branching**self.horizon

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "branching": self.branching,
            "horizon": self.horizon,
            "dim": self.dim,
            "jump_law": self.jump_law.value,
            "scale": self.scale,
            "random_probs": self.random_probs,
        }


def _raw_jumps(rng: np.random.Generator, law: JumpLaw, shape: tuple) -> np.ndarray:
    nodes, b, d = shape
    if law is JumpLaw.RADEMACHER:
        # balanced signs per block keep a two-point block an exact coin flip
        base = np.zeros(b)
        base[: b // 2] = 1.0
        base[b // 2 : 2 * (b // 2)] = -1.0
        keys = rng.random((nodes, d, b))
        return np.moveaxis(base[np.argsort(keys, axis=-1)], 1, 2)
    if law is JumpLaw.CENTERED_UNIFORM:
        return rng.uniform(-1.0, 1.0, size=shape)
    if law is JumpLaw.HEAVY_TAIL_TRUNCATED:
        return np.clip(rng.standard_t(HEAVY_TAIL_DF, size=shape), -HEAVY_TAIL_CAP, HEAVY_TAIL_CAP)
    return rng.poisson(POISSON_RATE, size=shape) - POISSON_RATE


def generate_martingale(spec: MartingaleSpec) -> tuple[FilteredSpace, Process]:
    """Random martingale with exactly centred increments on a b-ary tree.

    At every node the children's raw jumps are shifted by their
    conditional mean under the children's conditional probabilities.
    """
    b, T, d = spec.branching, spec.horizon, spec.dim
    if spec.n_atoms > spec.atom_cap:
        raise CapacityError(f"{b}^{T} = {spec.n_atoms} atoms exceeds cap {spec.atom_cap}")
    rng = np.random.default_rng(spec.seed)
    n_atoms = spec.n_atoms

    # conditional child weights per level, shape (b^(n-1), b)
    weights = []
    probs = np.ones(1)
    for n in range(1, T + 1):
        if spec.random_probs:
            w = rng.uniform(0.5, 1.5, size=(b ** (n - 1), b))
            w /= w.sum(axis=1, keepdims=True)
        else:
            w = np.full((b ** (n - 1), b), 1.0 / b)
        weights.append(w)
        probs = (probs[:, None] * w).ravel()
    probs /= probs.sum()
    space = FilteredSpace.tree(b, T, probs=probs, atom_cap=spec.atom_cap)

    values = np.zeros((T + 1, n_atoms, d))
    for n in range(1, T + 1):
        w = weights[n - 1]
        jumps = _raw_jumps(rng, spec.jump_law, (b ** (n - 1), b, d))
        jumps = jumps - np.einsum("kc,kcd->kd", w, jumps)[:, None, :]
        # leaves below each level-n node are contiguous
        values[n] = values[n - 1] + spec.scale * np.repeat(jumps.reshape(-1, d), b ** (T - n), axis=0)
    return space, Process(space, values, ADAPTED, check=False)
