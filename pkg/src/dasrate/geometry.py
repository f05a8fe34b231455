"""Cell layout, DA port placement, pathloss and user drops.

Coordinates are dimensionless cell units. Ports sit on a ring of radius
``sqrt(3/7) * R`` around the origin; port ``j`` (1-based) is at angle
``2*pi*(j-1)/N``.
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

#: Default cell radius; puts the port ring at radius 4.
DEFAULT_CELL_RADIUS = float(np.sqrt(112.0 / 3.0))
DEFAULT_PATHLOSS_EXPONENT = 3.0
RING_FRACTION = float(np.sqrt(3.0 / 7.0))


class Position(NamedTuple):
    x: float
    y: float


def place_ports(n_ports: int, cell_radius: float = DEFAULT_CELL_RADIUS) -> List[Position]:
    """Positions of `n_ports` DA ports, counter-clockwise from the positive x-axis."""
    if int(n_ports) != n_ports or n_ports < 1:
        raise ValueError(f"n_ports must be a positive integer, got {n_ports!r}")
    if not cell_radius > 0:
        raise ValueError(f"cell_radius must be positive, got {cell_radius!r}")
    r = RING_FRACTION * cell_radius
    angles = 2.0 * np.pi * np.arange(n_ports) / n_ports
    xs = r * np.cos(angles)
    ys = r * np.sin(angles)
    # snap rounding residue so (0, 4) is not (2.4e-16, 4)
    xs[np.abs(xs) < 1e-14 * r] = 0.0
    ys[np.abs(ys) < 1e-14 * r] = 0.0
    return [Position(float(x) + 0.0, float(y) + 0.0) for x, y in zip(xs, ys)]


@dataclass(frozen=True)
class CellLayout:
    """Single-cell DAS geometry.

    Attributes
    ----------
    cell_radius : float
        Radius of the circular cell.
    ports : tuple of Position
        DA port positions, in port-index order.
    pathloss_exponent : float
        Exponent ``p`` of the ``d**-p`` pathloss law.
    exclusion_radius : float
        Minimum user-to-port distance enforced when dropping users. Zero
        (the default) disables the constraint.
    """

    cell_radius: float = DEFAULT_CELL_RADIUS
    ports: tuple = ()
    pathloss_exponent: float = DEFAULT_PATHLOSS_EXPONENT
    exclusion_radius: float = 0.0

    def __post_init__(self):
        if not self.cell_radius > 0:
            raise ValueError("cell_radius must be positive")
        if len(self.ports) < 1:
            raise ValueError("a layout needs at least one port")
        if not self.pathloss_exponent > 0:
            raise ValueError("pathloss_exponent must be positive")
        if self.exclusion_radius < 0:
            raise ValueError("exclusion_radius must be non-negative")
        object.__setattr__(self, "ports", tuple(Position(*p) for p in self.ports))

    @classmethod
    def canonical(cls, n_ports: int, cell_radius: float = DEFAULT_CELL_RADIUS,
                  pathloss_exponent: float = DEFAULT_PATHLOSS_EXPONENT,
                  exclusion_radius: float = 0.0) -> "CellLayout":
        """Ring layout with `n_ports` ports."""
        return cls(cell_radius, tuple(place_ports(n_ports, cell_radius)),
                   pathloss_exponent, exclusion_radius)

    @property
    def n_ports(self) -> int:
        return len(self.ports)

    @property
    def port_array(self) -> np.ndarray:
        return np.array(self.ports, dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class LinkBudget:
    """Per-port transmit power and receiver noise variance (both linear)."""

    power: float
    noise_variance: float = 1.0

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError(f"power must be positive, got {self.power!r}")
        if not self.noise_variance > 0:
            raise ValueError(f"noise_variance must be positive, got {self.noise_variance!r}")

    @classmethod
    def from_snr_db(cls, snr_db: float, noise_variance: float = 1.0) -> "LinkBudget":
        return cls(noise_variance * 10.0 ** (snr_db / 10.0), noise_variance)

    @property
    def snr(self) -> float:
        return self.power / self.noise_variance

    @property
    def snr_db(self) -> float:
        return 10.0 * np.log10(self.snr)


def pathloss(distance, exponent: float = DEFAULT_PATHLOSS_EXPONENT):
    """Large-scale gain ``distance ** -exponent``.

    Works elementwise on arrays. Zero distance is rejected since the gain
    would be infinite.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(~(d > 0)) or np.any(~np.isfinite(d)):
        raise ValueError("distances must be finite and strictly positive")
    out = d ** (-float(exponent))
    return float(out) if out.ndim == 0 else out


def pathloss_db(distance, exponent: float = DEFAULT_PATHLOSS_EXPONENT):
    """Pathloss expressed as a positive loss in dB."""
    return -10.0 * np.log10(pathloss(distance, exponent))


def distance_matrix(users: Sequence[Position], layout: CellLayout) -> np.ndarray:
    """K x N matrix of user-to-port Euclidean distances."""
    ports = layout.port_array
    u = np.asarray(users, dtype=float).reshape(-1, 2)
    diff = u[:, None, :] - ports[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def build_pathloss_matrix(users: Sequence[Position], layout: CellLayout) -> np.ndarray:
    """K x N matrix with entry ``(i, j) = |user_i - port_j| ** -p``.

    Raises
    ------
    ValueError
        If a user coincides with a port.
    """
    d = distance_matrix(users, layout)
    if d.size == 0:
        return np.zeros((0, layout.n_ports))
    if np.any(d == 0):
        raise ValueError("a user position coincides with a DA port")
    return pathloss(d, layout.pathloss_exponent)


def sample_uniform_users(k: int, cell_radius: float, rng: np.random.Generator,
                         layout: Optional[CellLayout] = None) -> List[Position]:
    """Drop `k` users uniformly over the disk of radius `cell_radius`.

    The radius is drawn as ``R * sqrt(U)`` so each user consumes exactly two
    uniforms. When `layout` has a positive exclusion radius, users landing
    too close to a port are redrawn.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    users = []
    min_dist = layout.exclusion_radius if layout is not None else 0.0
    ports = layout.port_array if layout is not None else None
    while len(users) < k:
        u, phi = rng.random(2)
        rho = cell_radius * np.sqrt(u)
        angle = 2.0 * np.pi * phi
        p = Position(float(rho * np.cos(angle)), float(rho * np.sin(angle)))
        if min_dist > 0 and np.min(np.hypot(ports[:, 0] - p.x, ports[:, 1] - p.y)) < min_dist:
            continue
        users.append(p)
    return users
