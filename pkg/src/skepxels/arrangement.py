"""Joint-arrangement grids and the scatter metric used to select them.

An arrangement is an h x w grid holding a permutation of the joint
indices 0..J-1.  A set of m arrangements is scored by summing, over all
ordered member pairs and all joints, the Chebyshev distance between the
cells a joint occupies in the two members.  Sets are drawn by seeded
rejection sampling against a threshold on that score.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import SamplingError, ValidationError

AUTO_CALIBRATION_SETS = 1000
AUTO_PERCENTILE = 90.0
_CALIBRATION_STREAM = 0xCA11B
BRUTE_FORCE_GUARD = 10**7


@dataclass(frozen=True, eq=False)
class Arrangement:
    """One h x w permutation grid of joint indices."""

    grid: np.ndarray

    def __eq__(self, other):
        return isinstance(other, Arrangement) and np.array_equal(self.grid, other.grid)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=np.int64)
        if grid.ndim != 2:
            raise ValidationError(f"grid must be 2-D, got shape {grid.shape}")
        J = grid.size
        if not np.array_equal(np.sort(grid.ravel()), np.arange(J)):
            raise ValidationError("grid must be a permutation of 0..J-1")
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)

    @property
    def h(self) -> int:
        return self.grid.shape[0]

    @property
    def w(self) -> int:
        return self.grid.shape[1]

    @property
    def joint_count(self) -> int:
        return self.grid.size

    def positions(self) -> np.ndarray:
        """Cell (row, col) of each joint, shaped [J, 2]."""
        pos = np.empty((self.grid.size, 2), dtype=np.int64)
        rows, cols = np.indices(self.grid.shape)
        pos[self.grid.ravel()] = np.column_stack([rows.ravel(), cols.ravel()])
        return pos


def _positions(members: list[Arrangement]) -> np.ndarray:
    """[m, J, 2] cell positions of every joint in every member."""
    return np.stack([a.positions() for a in members])


def radial_distance(joint: int, member: int, members: list[Arrangement]) -> int:
    """Summed Chebyshev distance of ``joint``'s cell in ``member`` to its
    cells in all other members."""
    pos = _positions(members)
    d = np.abs(pos[:, joint] - pos[member, joint]).max(axis=1)
    return int(d.sum())  # own member contributes 0


def set_metric(members: list[Arrangement]) -> float:
    """Scatter score of an arrangement set.

    Double sum over members and joints of :func:`radial_distance`;
    symmetric pairs are counted from both ends, matching the metric's
    definition literally.
    """
    if not members:
        raise ValidationError("empty arrangement set")
    shape = members[0].grid.shape
    if any(a.grid.shape != shape for a in members):
        raise ValidationError("members must share grid dimensions")
    pos = _positions(members)  # [m, J, 2]
    cheb = np.abs(pos[:, None] - pos[None, :]).max(axis=3)  # [m, m, J]
    return float(cheb.sum())


@dataclass(frozen=True)
class ArrangementSet:
    """m arrangements with their scatter score and acceptance threshold."""

    members: tuple[Arrangement, ...]
    gamma: float
    threshold: float
    seed: int
    attempts: int = 1

    def __post_init__(self):
        recomputed = set_metric(list(self.members))
        if recomputed != self.gamma:
            raise ValidationError(
                f"stored gamma {self.gamma} != recomputed {recomputed}"
            )
        if not self.gamma > self.threshold:
            raise ValidationError(
                f"gamma {self.gamma} does not exceed threshold {self.threshold}"
            )

    @property
    def m(self) -> int:
        return len(self.members)

    @property
    def h(self) -> int:
        return self.members[0].h

    @property
    def w(self) -> int:
        return self.members[0].w

    def grids(self) -> np.ndarray:
        """Member grids stacked as an [m, h, w] index array."""
        return np.stack([a.grid for a in self.members])

    def set_id(self) -> str:
        return f"{self.h}x{self.w}m{self.m}s{self.seed}"

    def to_json(self) -> str:
        return json.dumps(
            {
                "h": self.h,
                "w": self.w,
                "m": self.m,
                "gamma": self.gamma,
                "gamma_t": self.threshold,
                "seed": self.seed,
                "attempts": self.attempts,
                "members": [a.grid.ravel().tolist() for a in self.members],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ArrangementSet":
        d = json.loads(text)
        members = tuple(
            Arrangement(np.asarray(flat, dtype=np.int64).reshape(d["h"], d["w"]))
            for flat in d["members"]
        )
        return cls(
            members=members,
            gamma=float(d["gamma"]),
            threshold=float(d["gamma_t"]),
            seed=int(d["seed"]),
            attempts=int(d.get("attempts", 1)),
        )


def _draw_flat(m: int, J: int, rng: np.random.Generator) -> np.ndarray:
    """m independent uniform permutations of 0..J-1, shaped [m, J]."""
    return rng.permuted(np.tile(np.arange(J), (m, 1)), axis=1)


def _metric_from_flat(flat: np.ndarray, w: int) -> float:
    """:func:`set_metric` on row-major flattened grids, no object overhead."""
    inv = np.argsort(flat, axis=1)  # inverse permutation = flat cell per joint
    r = inv // w
    c = inv % w
    dr = np.abs(r[:, None, :] - r[None, :, :])
    dc = np.abs(c[:, None, :] - c[None, :, :])
    return float(np.maximum(dr, dc).sum())


def calibrate_threshold(
    h: int, w: int, m: int, seed: int, samples: int = AUTO_CALIBRATION_SETS
) -> float:
    """Auto threshold: 90th percentile of the metric over random sets."""
    rng = np.random.default_rng([seed, _CALIBRATION_STREAM])
    flats = _draw_flat(samples * m, h * w, rng).reshape(samples, m, h * w)
    values = np.empty(samples)
    iu, ju = np.triu_indices(m, k=1)  # metric is symmetric: sum pairs once, double
    chunk = max(1, 2**22 // max(1, iu.size * h * w))  # bound the temporaries
    for lo in range(0, samples, chunk):
        batch = flats[lo : lo + chunk]
        inv = np.argsort(batch, axis=2)
        r = (inv // w).astype(np.int8)
        c = (inv % w).astype(np.int8)
        dr = np.abs(r[:, iu] - r[:, ju])
        dc = np.abs(c[:, iu] - c[:, ju])
        values[lo : lo + batch.shape[0]] = 2 * np.maximum(dr, dc).sum(
            axis=(1, 2), dtype=np.int64
        )
    return float(np.percentile(values, AUTO_PERCENTILE))


def generate_set(
    h: int,
    w: int,
    m: int,
    gamma_t: float | str = "auto",
    seed: int = 0,
    max_attempts: int = 10000,
) -> ArrangementSet:
    """Rejection-sample an arrangement set with scatter above ``gamma_t``.

    Each attempt draws m uniform random permutation grids from an rng
    derived from (seed, attempt index), so acceptance order (and hence
    the result) is independent of how attempts are scheduled.
    """
    if m < 1:
        raise ValidationError(f"m must be >= 1, got {m}")
    if max_attempts < 1:
        raise ValidationError(f"max_attempts must be >= 1, got {max_attempts}")
    if gamma_t == "auto":
        threshold = calibrate_threshold(h, w, m, seed)
    else:
        threshold = float(gamma_t)

    best = -math.inf
    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, attempt])
        flat = _draw_flat(m, h * w, rng)
        gamma = _metric_from_flat(flat, w)
        if gamma > threshold:
            members = tuple(Arrangement(row.reshape(h, w)) for row in flat)
            return ArrangementSet(
                members=members,
                gamma=gamma,
                threshold=threshold,
                seed=seed,
                attempts=attempt + 1,
            )
        best = max(best, gamma)
    raise SamplingError(
        f"no set with gamma > {threshold} in {max_attempts} attempts "
        f"(best gamma = {best}); lower gamma_t and retry",
        best_gamma=best,
    )


def brute_force_best(h: int, w: int, m: int) -> tuple[float, list[Arrangement]]:
    """Exact maximum of :func:`set_metric` by exhaustive enumeration.

    Test oracle only; refuses when the ordered candidate-set count
    exceeds the enumeration guard.
    """
    J = h * w
    total = math.factorial(J) ** m
    if total > BRUTE_FORCE_GUARD:
        raise ValidationError(
            f"{total} candidate sets exceed the enumeration guard {BRUTE_FORCE_GUARD}"
        )
    perms = [
        Arrangement(np.asarray(p, dtype=np.int64).reshape(h, w))
        for p in itertools.permutations(range(J))
    ]
    best_val = -math.inf
    best_set: list[Arrangement] = []
    for combo in itertools.product(perms, repeat=m):
        val = set_metric(list(combo))
        if val > best_val:
            best_val = val
            best_set = list(combo)
    return best_val, best_set


def grid_shape_for(joint_count: int) -> tuple[int, int]:
    """Most nearly square (h, w) factorization with h <= w."""
    best = (1, joint_count)
    for h in range(1, int(math.isqrt(joint_count)) + 1):
        if joint_count % h == 0:
            best = (h, joint_count // h)
    return best
