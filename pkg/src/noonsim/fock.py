"""Truncated Fock-space states over labeled optical modes.

States are sparse maps from occupation-number basis states to complex
amplitudes.  Modes are identified by opaque string labels; two photons can
only interfere if some element maps them onto the same label.  All values
are immutable and all operations are pure functions, so independent states
may be evaluated concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

ModeId = str

#: Default cap on the total photon number of constructed states.
DEFAULT_MAX_PHOTONS = 6

#: Default cap on the number of basis states ``enumerate_basis`` may return.
DEFAULT_MAX_BASIS_STATES = 200_000

#: Amplitudes with modulus at or below this are treated as exact zeros.
AMPLITUDE_ATOL = 1e-12

#: Allowed deviation of U†U from the identity.
UNITARY_ATOL = 1e-12


class FockError(Exception):
    """Base class for Fock-space errors."""


class CapacityError(FockError):
    """Raised when a state or basis would exceed a configured size limit."""


class ModeMismatchError(FockError):
    """Raised when an operation references modes a state does not declare."""


@dataclass(frozen=True)
class FockState:
    """One occupation-number basis state.

    ``occupations`` holds (mode, count) pairs sorted by mode label; modes
    with zero photons are dropped, so equality and hashing do not depend on
    which vacuum modes happen to be mentioned.
    """

    occupations: tuple[tuple[ModeId, int], ...]

    @classmethod
    def from_counts(cls, counts: Mapping[ModeId, int]) -> "FockState":
        cleaned = []
        for mode, n in counts.items():
            if n != int(n) or n < 0:
                raise ValueError(f"photon count for mode {mode!r} must be a nonnegative integer, got {n!r}")
            if n:
                cleaned.append((mode, int(n)))
        return cls(tuple(sorted(cleaned)))

    def count(self, mode: ModeId) -> int:
        for m, n in self.occupations:
            if m == mode:
                return n
        return 0

    def total(self) -> int:
        return sum(n for _, n in self.occupations)

    def modes(self) -> tuple[ModeId, ...]:
        return tuple(m for m, _ in self.occupations)

    def with_pair_counts(self, mode_a: ModeId, n_a: int, mode_b: ModeId, n_b: int) -> "FockState":
        """Return a copy with the counts of two modes replaced."""
        counts = {m: n for m, n in self.occupations}
        counts[mode_a] = n_a
        counts[mode_b] = n_b
        return FockState.from_counts(counts)

    def renamed(self, old: ModeId, new: ModeId) -> "FockState":
        counts = {m: n for m, n in self.occupations}
        if old in counts:
            counts[new] = counts.pop(old)
        return FockState.from_counts(counts)

    def label(self, modes: Iterable[ModeId]) -> str:
        return "|" + ",".join(str(self.count(m)) for m in modes) + ">"


@dataclass
class StateVector:
    """Sparse superposition of :class:`FockState` terms over a fixed mode set.

    Treat instances as immutable: operations return new vectors.
    """

    modes: tuple[ModeId, ...]
    amplitudes: dict[FockState, complex]

    def __post_init__(self):
        self.modes = tuple(self.modes)
        if len(set(self.modes)) != len(self.modes):
            raise ValueError(f"duplicate mode labels in {self.modes!r}")
        mode_set = set(self.modes)
        cleaned: dict[FockState, complex] = {}
        for fock, amp in self.amplitudes.items():
            unknown = set(fock.modes()) - mode_set
            if unknown:
                raise ModeMismatchError(f"basis state {fock} uses undeclared modes {sorted(unknown)}")
            amp = complex(amp)
            if abs(amp) > AMPLITUDE_ATOL:
                cleaned[fock] = amp
        self.amplitudes = cleaned

    def amplitude(self, fock: FockState) -> complex:
        return self.amplitudes.get(fock, 0j)

    def probability(self, fock: FockState) -> float:
        return abs(self.amplitude(fock)) ** 2

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.modes, {f: a / n for f, a in self.amplitudes.items()})

    def terms(self) -> Iterator[tuple[FockState, complex]]:
        return iter(sorted(self.amplitudes.items(), key=lambda t: t[0].occupations))


def enumerate_basis(
    n_photons: int,
    modes: Iterable[ModeId],
    max_states: int = DEFAULT_MAX_BASIS_STATES,
) -> list[FockState]:
    """All occupation patterns of ``n_photons`` over ``modes``.

    The result is ordered lexicographically on the occupation tuple taken in
    the given mode order, and has C(n + m - 1, n) entries.
    """
    modes = tuple(modes)
    if n_photons < 0:
        raise ValueError("photon number must be nonnegative")
    if not modes:
        raise ValueError("mode list must be nonempty")
    size = math.comb(n_photons + len(modes) - 1, n_photons)
    if size > max_states:
        raise CapacityError(f"basis of {size} states exceeds the limit of {max_states}")

    states: list[FockState] = []

    def build(remaining: int, index: int, partial: list[int]):
        if index == len(modes) - 1:
            states.append(FockState.from_counts(dict(zip(modes, partial + [remaining]))))
            return
        for n in range(remaining + 1):
            build(remaining - n, index + 1, partial + [n])

    build(n_photons, 0, [])
    return states


def basis_state(
    modes: Iterable[ModeId],
    counts: Mapping[ModeId, int],
    n_max: int = DEFAULT_MAX_PHOTONS,
) -> StateVector:
    """A single occupation-number state as a normalized vector."""
    fock = FockState.from_counts(counts)
    if fock.total() > n_max:
        raise CapacityError(f"{fock.total()} photons exceed the truncation of {n_max}")
    return StateVector(tuple(modes), {fock: 1.0 + 0j})


def noon_state(
    n_photons: int,
    mode_a: ModeId,
    mode_b: ModeId,
    n_max: int = DEFAULT_MAX_PHOTONS,
) -> StateVector:
    """The path-entangled state (|N,0> + |0,N>)/sqrt(2) on two modes."""
    if n_photons < 1:
        raise ValueError("photon number must be at least 1")
    if n_photons > n_max:
        raise CapacityError(f"{n_photons} photons exceed the truncation of {n_max}")
    amp = 1.0 / math.sqrt(2.0)
    return StateVector(
        (mode_a, mode_b),
        {
            FockState.from_counts({mode_a: n_photons}): amp,
            FockState.from_counts({mode_b: n_photons}): amp,
        },
    )


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b> over a shared mode set."""
    if set(a.modes) != set(b.modes):
        raise ModeMismatchError(f"mode sets differ: {sorted(a.modes)} vs {sorted(b.modes)}")
    shared = a.amplitudes.keys() & b.amplitudes.keys()
    return sum((a.amplitudes[f].conjugate() * b.amplitudes[f] for f in shared), 0j)


def _check_unitary(matrix: np.ndarray) -> np.ndarray:
    u = np.asarray(matrix, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {u.shape}")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(2)))
    if dev > UNITARY_ATOL:
        raise ValueError(f"matrix is not unitary (max |U†U - I| = {dev:.3e})")
    return u


def apply_two_mode_mixer(
    state: StateVector,
    matrix: np.ndarray,
    mode_a: ModeId,
    mode_b: ModeId,
) -> StateVector:
    """Apply a two-mode unitary by creation-operator substitution.

    The matrix acts as a+ -> U00 a+ + U10 b+ and b+ -> U01 a+ + U11 b+,
    expanded multinomially with the bosonic sqrt(n!) weights.  Photon number
    and norm are conserved.
    """
    u = _check_unitary(matrix)
    for m in (mode_a, mode_b):
        if m not in state.modes:
            raise ModeMismatchError(f"mode {m!r} not in state modes {state.modes!r}")
    if mode_a == mode_b:
        raise ValueError("mixer modes must be distinct")

    out: dict[FockState, complex] = {}
    for fock, amp in state.amplitudes.items():
        n_a = fock.count(mode_a)
        n_b = fock.count(mode_b)
        if n_a == 0 and n_b == 0:
            out[fock] = out.get(fock, 0j) + amp
            continue
        prefactor = amp / math.sqrt(math.factorial(n_a) * math.factorial(n_b))
        for j in range(n_a + 1):
            wa = math.comb(n_a, j) * u[0, 0] ** j * u[1, 0] ** (n_a - j)
            for k in range(n_b + 1):
                wb = math.comb(n_b, k) * u[0, 1] ** k * u[1, 1] ** (n_b - k)
                p = j + k
                q = n_a + n_b - p
                target = fock.with_pair_counts(mode_a, p, mode_b, q)
                weight = prefactor * wa * wb * math.sqrt(math.factorial(p) * math.factorial(q))
                out[target] = out.get(target, 0j) + weight
    return StateVector(state.modes, out)


def apply_phase(state: StateVector, mode: ModeId, phi: float) -> StateVector:
    """Multiply each basis amplitude by exp(i * n * phi) for the photon count n in ``mode``."""
    if mode not in state.modes:
        raise ModeMismatchError(f"mode {mode!r} not in state modes {state.modes!r}")
    factor = complex(np.exp(1j * phi))
    return StateVector(
        state.modes,
        {f: a * factor ** f.count(mode) for f, a in state.amplitudes.items()},
    )


def relabel_mode(state: StateVector, old: ModeId, new: ModeId) -> StateVector:
    """Rename a mode.  The new label must not collide with an existing one."""
    if old not in state.modes:
        raise ModeMismatchError(f"mode {old!r} not in state modes {state.modes!r}")
    if new in state.modes:
        raise ValueError(f"mode {new!r} already exists; relabel cannot merge modes")
    modes = tuple(new if m == old else m for m in state.modes)
    return StateVector(modes, {f.renamed(old, new): a for f, a in state.amplitudes.items()})
