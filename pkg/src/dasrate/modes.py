"""Transmission modes and candidate-set generation.

A mode is a length-N vector ``D = [u_1, ..., u_N]`` where ``u_j`` is the
(1-based) user served by port ``j`` and 0 means the port is off. Port and
user labels are 1-based throughout this module, as they appear in mode
vectors.
"""

import itertools
import json
from dataclasses import dataclass
from typing import FrozenSet, Iterator, Tuple

import numpy as np

DEFAULT_ENUMERATION_CAP = 10**6


class CandidateLimitError(ValueError):
    """Raised when an exhaustive enumeration would exceed the configured cap."""


@dataclass(frozen=True)
class TransmissionMode:
    """Port-to-user assignment vector."""

    assignments: Tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(u) for u in self.assignments)
        if len(a) == 0:
            raise ValueError("a mode needs at least one port")
        if any(u < 0 for u in a):
            raise ValueError(f"user indices must be non-negative: {list(a)}")
        if not any(a):
            raise ValueError("a mode must switch on at least one port")
        object.__setattr__(self, "assignments", a)

    @classmethod
    def of(cls, *users: int) -> "TransmissionMode":
        if len(users) == 1 and not isinstance(users[0], (int, np.integer)):
            users = tuple(users[0])
        return cls(tuple(users))

    @property
    def n_ports(self) -> int:
        return len(self.assignments)

    @property
    def active_users(self) -> FrozenSet[int]:
        return frozenset(u for u in self.assignments if u)

    @property
    def k_active(self) -> int:
        return len(self.active_users)

    @property
    def n_active(self) -> int:
        return sum(1 for u in self.assignments if u)

    @property
    def max_user(self) -> int:
        return max(self.assignments)

    def relabel(self, mapping) -> "TransmissionMode":
        """Apply a user relabeling ``{old: new}``; 0 stays 0."""
        return TransmissionMode(tuple(mapping[u] if u else 0 for u in self.assignments))

    def to_json(self) -> str:
        return json.dumps(list(self.assignments))

    def __str__(self):
        return "[" + ",".join(str(u) for u in self.assignments) + "]"


@dataclass(frozen=True)
class ModeGroups:
    """Serving and interference port sets for every user of a mode.

    ``serving_sets[i - 1]`` is ``G_i``, the ports serving user ``i``;
    ``interference_sets[i - 1]`` is ``G_T \\ G_i``. Port labels are 1-based.
    """

    serving_sets: Tuple[FrozenSet[int], ...]
    active_set: FrozenSet[int]
    interference_sets: Tuple[FrozenSet[int], ...]

    @property
    def k_users(self) -> int:
        return len(self.serving_sets)

    def serving(self, user: int) -> FrozenSet[int]:
        return self.serving_sets[user - 1]

    def interference(self, user: int) -> FrozenSet[int]:
        return self.interference_sets[user - 1]

    def is_active(self, user: int) -> bool:
        return bool(self.serving_sets[user - 1])


def derive_groups(mode: TransmissionMode, k_users: int) -> ModeGroups:
    """Split the active ports of `mode` into per-user serving/interference sets."""
    if mode.max_user > k_users:
        raise ValueError(f"mode {mode} references user {mode.max_user} but k_users={k_users}")
    serving = [set() for _ in range(k_users)]
    for port, user in enumerate(mode.assignments, start=1):
        if user:
            serving[user - 1].add(port)
    active = frozenset(p for p, u in enumerate(mode.assignments, start=1) if u)
    return ModeGroups(
        serving_sets=tuple(frozenset(s) for s in serving),
        active_set=active,
        interference_sets=tuple(active - frozenset(s) for s in serving),
    )


@dataclass(frozen=True)
class CandidateSet:
    """Ordered, duplicate-free collection of modes.

    `provenance` is ``"ideal"`` or ``"min_distance"``. Order is the
    generation order and is what breaks rate ties during selection.
    """

    modes: Tuple[TransmissionMode, ...]
    provenance: str

    def __post_init__(self):
        seen = dict.fromkeys(self.modes)
        object.__setattr__(self, "modes", tuple(seen))

    def __len__(self):
        return len(self.modes)

    def __iter__(self) -> Iterator[TransmissionMode]:
        return iter(self.modes)

    def __contains__(self, mode):
        if not isinstance(mode, TransmissionMode):
            mode = TransmissionMode(tuple(mode))
        return mode in self.modes

    def as_lists(self):
        return [list(m.assignments) for m in self.modes]

    def to_json(self) -> str:
        return json.dumps(self.as_lists())


def ideal_count(n_ports: int, k_users: int) -> int:
    """Closed-form size of the exhaustive candidate set, ``(K+1)^N - K(2^N - 2) - 1``."""
    n, k = int(n_ports), int(k_users)
    if n < 1 or k < 1:
        raise ValueError("n_ports and k_users must be positive")
    return (k + 1) ** n - k * (2**n - 2) - 1


def proposed_count(n_ports: int) -> int:
    """Generic size ``2^N - N`` of the minimum-distance candidate set."""
    n = int(n_ports)
    if n < 1:
        raise ValueError("n_ports must be positive")
    return 2**n - n


def enumerate_ideal(n_ports: int, k_users: int,
                    cap: int = DEFAULT_ENUMERATION_CAP) -> CandidateSet:
    """All admissible modes for exhaustive selection.

    Every non-empty assignment is kept except single-user modes that leave
    some port off; the K full single-user modes ``[i, ..., i]`` remain.
    Modes come out in lexicographic order of their assignment vectors.

    Raises
    ------
    CandidateLimitError
        If the candidate count exceeds `cap`.
    """
    count = ideal_count(n_ports, k_users)
    if count > cap:
        raise CandidateLimitError(
            f"ideal enumeration for N={n_ports}, K={k_users} has {count} modes (cap {cap})")
    modes = []
    for vec in itertools.product(range(k_users + 1), repeat=n_ports):
        nonzero = [u for u in vec if u]
        if not nonzero:
            continue
        if len(set(nonzero)) == 1 and len(nonzero) < n_ports:
            continue
        modes.append(TransmissionMode(vec))
    return CandidateSet(tuple(modes), "ideal")


def nearest_users(distances: np.ndarray) -> np.ndarray:
    """1-based index of the nearest user for each port (lowest index on ties)."""
    return np.argmin(np.asarray(distances, dtype=float), axis=0) + 1


def generate_min_distance_candidates(distances) -> CandidateSet:
    """Reduced candidate set built from nearest-user assignments.

    Starting from the mode where every port serves its nearest user, each
    of the ``2^N - 1`` port on/off masks yields a candidate, keeping only
    those with more than one active port. The full single-user mode for the
    user holding the globally smallest distance is appended.

    Parameters
    ----------
    distances : array_like, shape (K, N)
        User-to-port distances.
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
        raise ValueError(f"distances must be a non-empty K x N matrix, got shape {d.shape}")
    if np.any(~np.isfinite(d)) or np.any(d <= 0):
        raise ValueError("distances must be finite and positive")
    n = d.shape[1]
    base = tuple(int(u) for u in nearest_users(d))
    modes = [TransmissionMode(base)]
    for m in range(1, 2**n):
        # bit j (most significant first) switches port j
        bits = [(m >> (n - 1 - j)) & 1 for j in range(n)]
        masked = tuple(u if b else 0 for u, b in zip(base, bits))
        if sum(1 for u in masked if u) > 1:
            modes.append(TransmissionMode(masked))
    i_star, _ = np.unravel_index(np.argmin(d), d.shape)
    modes.append(TransmissionMode((int(i_star) + 1,) * n))
    return CandidateSet(tuple(modes), "min_distance")


def as_mode(value) -> TransmissionMode:
    """Coerce a list/tuple/JSON string/mode into a TransmissionMode."""
    if isinstance(value, TransmissionMode):
        return value
    if isinstance(value, str):
        value = json.loads(value)
    return TransmissionMode(tuple(value))
