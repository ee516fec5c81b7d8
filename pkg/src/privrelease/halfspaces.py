"""Large-margin halfspace queries via random sign projections and a grid net.

The release is not synthetic data: it is a set of projection matrices, a
grid of canonical directions in the projected space, and one noisy answer
per (projection, direction) pair.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError, ResourceLimitError
from .noise import BudgetLedger, NoiseFn, laplace_noise, split_budget

log = logging.getLogger(__name__)

NET_CAP = 10_000_000
UNIT_TOL = 1e-9
SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] == 0:
            raise InvalidInputError("point cloud is empty")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("point cloud has non-finite coordinates")
        norms = np.linalg.norm(pts, axis=1)
        if (norms == 0).any():
            raise InvalidInputError("point cloud contains the zero vector")
        off = np.abs(norms - 1) > UNIT_TOL
        if off.any():
            log.warning("rescaling %d of %d points to unit norm", int(off.sum()), len(pts))
            pts = pts / norms[:, None]
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _unit(y, d: int | None = None) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if d is not None and y.shape[0] != d:
        raise InvalidInputError(f"query has dimension {y.shape[0]}, expected {d}")
    norm = np.linalg.norm(y)
    if norm == 0:
        raise InvalidInputError("query vector is zero")
    if abs(norm - 1) > UNIT_TOL:
        raise InvalidInputError(f"query vector must be unit length, has norm {norm}")
    return y


def halfspace_answers(points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Fraction of points with strictly positive inner product, per direction."""
    dt = np.ascontiguousarray(np.atleast_2d(directions).T)
    counts = np.zeros(dt.shape[1], dtype=np.int64)
    for start in range(0, points.shape[0], 256):
        counts += np.count_nonzero(points[start:start + 256] @ dt > 0, axis=0)
    return counts / points.shape[0]


def halfspace_query(cloud: PointCloud, y) -> float:
    y = _unit(y, cloud.d)
    return float(np.mean(cloud.points @ y > 0))


def margin(cloud: PointCloud, y) -> float:
    y = _unit(y, cloud.d)
    return float(np.abs(cloud.points @ y).min())


def random_projection(T: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """T x d matrix with independent entries +-1/sqrt(T)."""
    if T < 1 or d < 1:
        raise InvalidInputError("projection dimensions must be >= 1")
    signs = rng.integers(0, 2, size=(T, d), dtype=np.int8) * 2 - 1
    return signs / math.sqrt(T)


def grid_levels(T: int, step: float) -> int:
    """K such that the grid per coordinate is {-K, ..., K} * step within [-1, 1]."""
    return int(math.floor(1 / step + 1e-9))


def predicted_net_size(T: int, step: float) -> int:
    return (2 * grid_levels(T, step) + 1) ** T - 1


def log10_claimed_net_size(T: int, gamma: float) -> float:
    """log10 of the claimed count (sqrt(T)/gamma)**T for a gamma-net of unit vectors."""
    return T * math.log10(math.sqrt(T) / gamma)


def log10_grid_size(T: int, step: float) -> float:
    return T * math.log10(2 * grid_levels(T, step) + 1)


def sphere_net(
    T: int,
    gamma: float,
    *,
    step: float | None = None,
    prune: bool = False,
    cap: int = NET_CAP,
) -> np.ndarray:
    """Grid points with coordinates in multiples of ``step`` inside [-1, 1]^T.

    ``step`` defaults to gamma/sqrt(T). The zero vector is dropped; with
    ``prune`` only points with norm in [1 - gamma, 1 + gamma] are kept.
    Rows are in lexicographic order of their coordinates.
    """
    if T < 1 or not gamma > 0:
        raise InvalidInputError("sphere net needs T >= 1 and gamma > 0")
    step = gamma / math.sqrt(T) if step is None else step
    if not step > 0:
        raise InvalidInputError("grid step must be positive")
    if log10_grid_size(T, step) > math.log10(cap) + 1 or predicted_net_size(T, step) > cap:
        raise ResourceLimitError(
            f"grid net in T={T} with step {step:.6g} has 10^{log10_grid_size(T, step):.4g} points "
            f"(claimed bound (sqrt(T)/gamma)^T = 10^{log10_claimed_net_size(T, gamma):.4g}), "
            f"above the cap of {cap}"
        )
    k = grid_levels(T, step)
    levels = np.arange(-k, k + 1)
    grid = np.stack(np.meshgrid(*([levels] * T), indexing="ij"), axis=-1).reshape(-1, T)
    grid = grid[np.any(grid != 0, axis=1)] * step
    if prune:
        norms = np.linalg.norm(grid, axis=1)
        grid = grid[(norms >= 1 - gamma) & (norms <= 1 + gamma)]
    if grid.shape[0] == 0:
        raise InvalidInputError("grid net is empty")
    return grid


@dataclass(frozen=True)
class HalfspaceParams:
    """Parameter block; theory values are always computed and reported."""

    d: int
    gamma: float
    alpha: float
    beta: float
    epsilon: float
    T_override: int | None = None
    grid_step_override: float | None = None
    m_override: int | None = None
    prune: bool = False
    varsigma: float = field(init=False)
    tau: float = field(init=False)
    T_theory: int = field(init=False)
    m_theory: int = field(init=False)

    def __post_init__(self):
        if self.d < 1:
            raise InvalidInputError("dimension must be >= 1")
        for name in ("gamma", "alpha", "beta"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise InvalidInputError(f"{name} must lie in (0, 1), got {v}")
        if not self.epsilon > 0:
            raise InvalidInputError("epsilon must be positive")
        varsigma = self.gamma / 4
        tau = self.alpha / 8
        object.__setattr__(self, "varsigma", varsigma)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "T_theory", math.ceil(20 * varsigma**-2 * math.log(1 / tau)))
        m = 16 / self.alpha**2 * self.d * (math.log(4 * math.sqrt(self.d) / self.gamma) + math.log(1 / self.beta))
        object.__setattr__(self, "m_theory", math.ceil(m))

    @property
    def override_mode(self) -> bool:
        return any(v is not None for v in (self.T_override, self.grid_step_override, self.m_override)) or self.prune

    @property
    def T(self) -> int:
        return self.T_override if self.T_override is not None else self.T_theory

    @property
    def m(self) -> int:
        return self.m_override if self.m_override is not None else self.m_theory

    @property
    def grid_step(self) -> float:
        # the net must cover at radius gamma/4
        return self.grid_step_override if self.grid_step_override is not None else (self.gamma / 4) / math.sqrt(self.T)

    def report(self) -> dict:
        out = {k: v for k, v in asdict(self).items()}
        out.update(
            T=self.T,
            m=self.m,
            grid_step=self.grid_step,
            override_mode=self.override_mode,
            log10_grid_size=log10_grid_size(self.T, self.grid_step),
            log10_theory_net_bound=log10_claimed_net_size(self.T_theory, self.gamma / 4),
        )
        if self.override_mode:
            out["note"] = "override-mode: guarantees are empirical, not theorem-backed"
        return out


@dataclass(eq=False)
class ProjectedHalfspaceStructure:
    matrices: np.ndarray  # (m, T, d), entries +-1/sqrt(T)
    net: np.ndarray  # (|U|, T)
    values: np.ndarray  # (m, |U|)
    params: HalfspaceParams | None = None
    seed: int | None = None
    ledger: BudgetLedger | None = None

    @property
    def m(self) -> int:
        return self.matrices.shape[0]

    @property
    def T(self) -> int:
        return self.matrices.shape[1]

    @property
    def d(self) -> int:
        return self.matrices.shape[2]

    def nearest(self, y) -> np.ndarray:
        """j(i): index of the net point closest to A_i y, lowest index on ties."""
        y = _unit(y, self.d)
        proj = self.matrices @ y  # (m, T)
        dist = ((proj[:, None, :] - self.net[None, :, :]) ** 2).sum(axis=-1)
        return np.argmin(dist, axis=1)

    def to_dict(self) -> dict:
        signs = np.where(self.matrices > 0, "+", "-")
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "projected_halfspace_structure",
            "dims": {"m": self.m, "T": self.T, "d": self.d, "net_size": int(self.net.shape[0])},
            "seed": self.seed,
            "params": self.params.report() if self.params else None,
            "params_input": None if self.params is None else {
                k: getattr(self.params, k)
                for k in ("d", "gamma", "alpha", "beta", "epsilon", "T_override",
                          "grid_step_override", "m_override", "prune")
            },
            "matrix_signs": ["".join(row) for mat in signs for row in mat],
            "net": self.net.tolist(),
            "values": self.values.tolist(),
            "ledger": None if self.ledger is None else self.ledger.to_dict(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "ProjectedHalfspaceStructure":
        if doc.get("kind") != "projected_halfspace_structure":
            raise InvalidInputError("document is not a projected halfspace structure")
        dims = doc["dims"]
        m, T, d = dims["m"], dims["T"], dims["d"]
        rows = doc["matrix_signs"]
        if len(rows) != m * T or any(len(r) != d or set(r) - {"+", "-"} for r in rows):
            raise InvalidInputError("matrix sign block does not match the stated dimensions")
        signs = np.array([[1.0 if c == "+" else -1.0 for c in r] for r in rows]).reshape(m, T, d)
        params = HalfspaceParams(**doc["params_input"]) if doc.get("params_input") else None
        return cls(
            matrices=signs / math.sqrt(T),
            net=np.asarray(doc["net"], dtype=float).reshape(-1, T),
            values=np.asarray(doc["values"], dtype=float).reshape(m, -1),
            params=params,
            seed=doc.get("seed"),
        )

    @classmethod
    def loads(cls, text: str) -> "ProjectedHalfspaceStructure":
        return cls.from_dict(json.loads(text))


def release_halfspaces(
    cloud: PointCloud,
    params: HalfspaceParams,
    rng: np.random.Generator,
    *,
    ledger: BudgetLedger | None = None,
    noise: NoiseFn | None = None,
    net: np.ndarray | None = None,
    seed: int | None = None,
    cap: int = NET_CAP,
) -> ProjectedHalfspaceStructure:
    """Project the cloud m times and answer every net direction with Laplace noise.

    Each of the m*|U| answers gets an equal share epsilon/(m*|U|) of the
    budget, i.e. noise Lap(m*|U| / (epsilon * n)).
    """
    if cloud.d != params.d:
        raise InvalidInputError(f"cloud dimension {cloud.d} does not match params d={params.d}")
    T, m = params.T, params.m
    if net is None:
        try:
            net = sphere_net(T, params.gamma / 4, step=params.grid_step, prune=params.prune, cap=cap)
        except ResourceLimitError as exc:
            raise ResourceLimitError(
                f"{exc}; theory parameters T={params.T_theory}, m={params.m_theory} -- "
                "pass T / grid-step / m overrides to run at desk scale"
            ) from None
    net = np.asarray(net, dtype=float)
    if net.ndim != 2 or net.shape[1] != T:
        raise InvalidInputError("net vectors must have length T")
    if np.any(np.all(net == 0, axis=1)):
        raise InvalidInputError("net must not contain the zero vector")
    ledger = ledger if ledger is not None else BudgetLedger()
    noise = noise or laplace_noise(rng)
    k = m * net.shape[0]
    eps_call = split_budget(Fraction(params.epsilon), k)
    scale = k / (params.epsilon * cloud.n)

    matrices = np.empty((m, T, cloud.d))
    values = np.empty((m, net.shape[0]))
    for i in range(m):
        matrices[i] = random_projection(T, cloud.d, rng)
        projected = cloud.points @ matrices[i].T
        values[i] = halfspace_answers(projected, net)
    values += np.asarray(noise(scale, values.size)).reshape(values.shape)
    ledger.spend("release_halfspaces", eps_call, k)
    return ProjectedHalfspaceStructure(matrices, net, values, params, seed, ledger)


def evaluate_halfspace(structure: ProjectedHalfspaceStructure, y) -> float:
    j = structure.nearest(y)
    return float(structure.values[np.arange(structure.m), j].mean())


def jl_violation(A: np.ndarray, x: np.ndarray, y: np.ndarray, varsigma: float) -> np.ndarray:
    """Inner-product distortion events for a stack of projections A (k, T, d)."""
    ax, ay = A @ x, A @ y
    lhs = np.abs(np.einsum("kt,kt->k", ax, ay) - x @ y)
    return lhs >= varsigma / 2 * (x @ x + y @ y)


def jl_min_dimension(varsigma: float, tau: float) -> int:
    return math.ceil(20 * varsigma**-2 * math.log(1 / tau))


def jl_inner_product_check(x, y, T: int, varsigma: float, trials: int, rng: np.random.Generator,
                           chunk: int = 1000) -> float:
    """Fraction of random projections distorting <x, y> beyond the corollary's band."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InvalidInputError("x and y must have the same dimension")
    hits = 0
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        signs = rng.integers(0, 2, size=(k, T, x.shape[0]), dtype=np.int8) * 2 - 1
        hits += int(jl_violation(signs / math.sqrt(T), x, y, varsigma).sum())
        done += k
    return hits / trials


def random_unit_vectors(count: int, d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((count, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_margin_queries(cloud: PointCloud, gamma: float, count: int, rng: np.random.Generator,
                          max_draws: int = 10_000_000) -> np.ndarray:
    """Rejection-sample unit queries with margin >= gamma on the cloud."""
    out = []
    drawn = 0
    while len(out) < count:
        if drawn >= max_draws:
            raise ResourceLimitError(
                f"found only {len(out)} of {count} margin-{gamma} queries in {drawn} draws"
            )
        batch = random_unit_vectors(4096, cloud.d, rng)
        drawn += 4096
        ok = np.abs(cloud.points @ batch.T).min(axis=0) >= gamma
        out.extend(batch[ok])
    return np.asarray(out[:count])
