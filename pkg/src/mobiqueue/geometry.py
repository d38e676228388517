"""Point configurations on a wrapped square arena."""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class Arena:
    """Square arena with opposite edges identified (a flat torus).

    Attributes
    ----------
    side_length : float
        Edge length.
    wraparound : bool
        Kept for completeness; simulations always wrap.
    """

    side_length: float = 100.0
    wraparound: bool = True

    def __post_init__(self):
        if not self.side_length > 0:
            raise ParameterError(f"side_length must be positive, got {self.side_length}")

    @property
    def area(self):
        return self.side_length ** 2

    def wrap(self, points):
        """Map coordinates back into ``[0, side)``."""
        out = np.mod(points, self.side_length)
        # np.mod can return exactly side for tiny negative inputs
        out[out >= self.side_length] = 0.0
        return out


@dataclass(frozen=True)
class PointConfiguration:
    """Interferer positions at one instant.

    Row ``i`` of ``points`` is the position of interferer ``i``; the index is
    the interferer's identity for the whole run.
    """

    points: np.ndarray
    arena: Arena

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        L = self.arena.side_length
        if pts.size and (pts.min() < 0 or pts.max() >= L):
            raise ParameterError("points must lie in [0, side_length)^2")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    def with_points(self, points):
        return PointConfiguration(points, self.arena)


def sample_ppp(intensity, arena, rng):
    """Sample a homogeneous Poisson point process on the arena.

    Parameters
    ----------
    intensity : float
        Mean number of points per unit area.
    arena : Arena
    rng : numpy.random.Generator

    Returns
    -------
    PointConfiguration
    """
    if intensity < 0:
        raise ParameterError(f"intensity must be nonnegative, got {intensity}")
    n = rng.poisson(intensity * arena.area)
    return sample_uniform(n, arena, rng)


def sample_uniform(n, arena, rng):
    """Place exactly ``n`` i.i.d. uniform points (a binomial process).

    Conditioned on its count, a Poisson process is exactly this, so long runs
    that should not depend on one random count use it with ``n = Λ·area``.
    """
    if n < 0:
        raise ParameterError(f"point count must be nonnegative, got {n}")
    pts = rng.random((int(n), 2)) * arena.side_length
    return PointConfiguration(arena.wrap(pts), arena)


def torus_distance(p, q, arena):
    """Minimal-image distance on the torus.

    Broadcasts over leading dimensions of ``p`` and ``q`` (last axis of
    length 2).
    """
    L = arena.side_length
    d = np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    d = np.mod(d, L)
    d = np.minimum(d, L - d)
    r = np.hypot(d[..., 0], d[..., 1])
    return float(r) if np.ndim(r) == 0 else r


def box_counts(config, k):
    """Counts of points in a ``k`` by ``k`` grid of equal boxes."""
    if k < 1:
        raise ParameterError(f"grid size must be at least 1, got {k}")
    L = config.arena.side_length
    counts, _, _ = np.histogram2d(config.points[:, 0], config.points[:, 1],
                                  bins=k, range=[[0, L], [0, L]])
    return counts.astype(np.int64)
