"""Sobol low-discrepancy sequence and the calibration parameter pool.

Points are produced by Gray-code XOR updates of 31-bit integer state, one
direction-vector table per dimension. Index 0 of the sequence is the
all-zeros point; generation starts at `skip`, which defaults to 1 because
the zero corner maps to a degenerate parameter vector (all lower bounds).
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["MAX_DIM", "ParameterBounds", "ParameterPool", "sobol_points", "scale"]

# Primitive-polynomial degree s, coefficient bits a, and initial direction
# numbers m_1..m_s for dimensions 2..16, from the Joe & Kuo "new-joe-kuo-6"
# table (https://web.maths.unsw.edu.au/~fkuo/sobol/). Dimension 1 is the
# van der Corput sequence in base 2 and needs no table row.
_JOE_KUO = (
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
    (4, 4, (1, 3, 5, 13)),
    (5, 2, (1, 1, 5, 5, 17)),
    (5, 4, (1, 1, 5, 5, 5)),
    (5, 7, (1, 1, 7, 11, 19)),
    (5, 11, (1, 1, 5, 1, 1)),
    (5, 13, (1, 1, 1, 3, 11)),
    (5, 14, (1, 3, 5, 5, 31)),
    (6, 1, (1, 3, 3, 9, 7, 49)),
    (6, 13, (1, 1, 1, 15, 21, 21)),
    (6, 16, (1, 3, 1, 13, 27, 49)),
)

MAX_DIM = len(_JOE_KUO) + 1
_NBITS = 31
_SCALE = float(1 << _NBITS)


def _direction_vectors(dim_index: int) -> np.ndarray:
    """31 direction integers for one dimension (0 = van der Corput)."""
    v = np.zeros(_NBITS, dtype=np.int64)
    if dim_index == 0:
        for j in range(_NBITS):
            v[j] = 1 << (_NBITS - 1 - j)
        return v
    s, a, m = _JOE_KUO[dim_index - 1]
    for j in range(s):
        v[j] = m[j] << (_NBITS - 1 - j)
    for j in range(s, _NBITS):
        x = int(v[j - s]) ^ (int(v[j - s]) >> s)
        for k in range(1, s):
            if (a >> (s - 1 - k)) & 1:
                x ^= int(v[j - k])
        v[j] = x
    return v


def sobol_points(dim: int, n: int, skip: int = 1) -> np.ndarray:
    """The n sequence points at indices skip .. skip+n-1, in [0, 1)^dim.

    Deterministic: the same (dim, n, skip) always yields the same matrix.
    """
    if not 1 <= dim <= MAX_DIM:
        raise ValueError(f"dim must be in 1..{MAX_DIM} (direction-number table size)")
    if n < 1:
        raise ValueError("n must be at least 1")
    if skip < 0:
        raise ValueError("skip must be non-negative")
    directions = np.stack([_direction_vectors(i) for i in range(dim)])
    out = np.empty((n, dim))
    state = np.zeros(dim, dtype=np.int64)
    row = 0
    if skip == 0:
        out[0] = 0.0
        row = 1
    for k in range(1, skip + n):
        # The lowest zero bit of k-1 equals the lowest set bit of k.
        c = (k & -k).bit_length() - 1
        state ^= directions[:, c]
        if k >= skip:
            out[row] = state / _SCALE
            row += 1
        if row == n:
            break
    return out


@dataclass(frozen=True)
class ParameterBounds:
    """Admissible (low, high) box for kappa, beta and sigma_n."""

    kappa: tuple[float, float]
    beta: tuple[float, float]
    sigma_n: tuple[float, float]

    def __post_init__(self):
        for name, (low, high) in zip(self.names(), self.as_array()):
            if not low < high:
                raise ValueError(f"{name}: low must be below high")
            if low < 0:
                raise ValueError(f"{name}: lower bound must be non-negative")

    @staticmethod
    def names() -> tuple[str, str, str]:
        return ("kappa", "beta", "sigma_n")

    def as_array(self) -> np.ndarray:
        return np.array([self.kappa, self.beta, self.sigma_n], dtype=np.float64)

    @classmethod
    def default_for_day(cls, return_std: float) -> "ParameterBounds":
        """Stock-scaled defaults: sigma_n must bracket the day's noise scale."""
        if not return_std > 0:
            raise ValueError("return_std must be positive")
        return cls(
            kappa=(0.0, 0.5),
            beta=(0.0, 5.0 * return_std),
            sigma_n=(1e-6, 3.0 * return_std),
        )


@dataclass
class ParameterPool:
    """Candidate parameter vectors with evaluation bookkeeping.

    labels[i] is meaningful only where evaluated[i] is set; unevaluated
    entries hold NaN.
    """

    points: np.ndarray
    evaluated: np.ndarray = field(default=None)
    labels: np.ndarray = field(default=None)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.evaluated is None:
            self.evaluated = np.zeros(len(self.points), dtype=bool)
        if self.labels is None:
            self.labels = np.full(len(self.points), np.nan)

    def __len__(self):
        return len(self.points)

    def mark(self, index: int, label: float):
        self.evaluated[index] = True
        self.labels[index] = label

    def labeled_indices(self) -> np.ndarray:
        return np.flatnonzero(self.evaluated)

    def unlabeled_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.evaluated)


def scale(points: np.ndarray, bounds: ParameterBounds) -> ParameterPool:
    """Affine map of unit-cube points into the parameter box."""
    u = np.asarray(points, dtype=np.float64)
    box = bounds.as_array()
    if u.ndim != 2 or u.shape[1] != len(box):
        raise ValueError("points must be an n x 3 matrix matching the bounds")
    low = box[:, 0]
    high = box[:, 1]
    return ParameterPool(points=low + u * (high - low))
