"""Nonlocal games, their evaluation, and the two built-in benchmark games."""
import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _config
from .errors import EmptyDiagonal, InvalidDistribution, LabelMismatch, NotSquare, UnknownName
from .strategy import (
    BipartiteState,
    MeasurementFamily,
    Strategy,
    delta_sync,
    induce_correlation,
)


@dataclass(frozen=True, eq=False)
class NonlocalGame:
    """Question distribution ``nu[x, y]`` and 0/1 predicate ``predicate[x, y, a, b]``."""

    x_labels: tuple
    y_labels: tuple
    a_labels: tuple
    b_labels: tuple
    nu: np.ndarray
    predicate: np.ndarray

    def __post_init__(self):
        for name in ("x_labels", "y_labels", "a_labels", "b_labels"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        nu = np.asarray(self.nu, dtype=np.float64)
        pred = np.asarray(self.predicate)
        shape = (len(self.x_labels), len(self.y_labels), len(self.a_labels), len(self.b_labels))
        if nu.shape != shape[:2] or pred.shape != shape:
            raise LabelMismatch(f"table shapes {nu.shape}, {pred.shape} do not match labels {shape}")
        if np.any(nu < 0) or abs(nu.sum() - 1.0) > _config.TOL.distribution:
            raise InvalidDistribution("question distribution must be nonnegative and sum to 1")
        if not np.all((pred == 0) | (pred == 1)):
            raise ValueError("predicate entries must be 0 or 1")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "predicate", pred.astype(np.int8))

    @property
    def square(self) -> bool:
        return self.x_labels == self.y_labels and self.a_labels == self.b_labels

    def marginal(self, side="A") -> np.ndarray:
        return self.nu.sum(axis=1) if side in ("A", 0) else self.nu.sum(axis=0)

    def conditional(self, x_index: int) -> np.ndarray:
        row = self.nu[x_index]
        total = row.sum()
        return row / total if total > 0 else row


@dataclass(frozen=True)
class ProjectionStructure:
    """``f[x, y, a]`` is the index of the unique accepted Bob answer."""

    f: np.ndarray


@dataclass(frozen=True)
class GameReport:
    value: float
    delta_sync_diag: Optional[float]  # None unless questions and answers match on both sides
    synchronous: bool
    projection: bool
    symmetric: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "delta_sync_diag": self.delta_sync_diag,
            "flags": {
                "synchronous": self.synchronous,
                "projection": self.projection,
                "symmetric": self.symmetric,
            },
        }


def _check_labels(g: NonlocalGame, s: Strategy):
    if len(s.alice.questions) != len(g.x_labels) or len(s.bob.questions) != len(g.y_labels):
        raise LabelMismatch("strategy question sets do not match the game")
    if len(s.alice.outcomes) != len(g.a_labels) or len(s.bob.outcomes) != len(g.b_labels):
        raise LabelMismatch("strategy answer sets do not match the game")


def game_value(g: NonlocalGame, s: Strategy) -> float:
    """Winning probability ``E_{(x,y)~nu} sum_{a,b} D(a,b|x,y) C[x,y,a,b]``."""
    _check_labels(g, s)
    corr = induce_correlation(s)
    return float(np.einsum("xy,xyab,xyab->", g.nu, g.predicate, corr.table))


def game_value_direct(g: NonlocalGame, s: Strategy) -> float:
    """Same quantity as :func:`game_value` via one global operator ``<psi|W|psi>``."""
    _check_labels(g, s)
    psi = s.state.amplitudes
    w = np.zeros((psi.size, psi.size), dtype=np.complex128)
    a_ops, b_ops = s.alice.elements, s.bob.elements
    for x, y in zip(*np.nonzero(g.nu)):
        for a, b in zip(*np.nonzero(g.predicate[x, y])):
            w += g.nu[x, y] * np.kron(a_ops[x, a], b_ops[y, b])
    return float(np.real(psi.conj() @ w @ psi))


def detect_synchronous(g: NonlocalGame) -> bool:
    if not g.square:
        raise NotSquare("synchronicity needs X = Y and A = B")
    n = len(g.x_labels)
    diag_nu = np.diag(g.nu)
    if np.any(diag_nu <= 0):
        return False
    off = ~np.eye(len(g.a_labels), dtype=bool)
    return not any(np.any(g.predicate[x, x][off]) for x in range(n))


def detect_symmetric(g: NonlocalGame) -> bool:
    if not g.square:
        return False
    return bool(
        np.allclose(g.nu, g.nu.T, atol=_config.TOL.distribution)
        and np.array_equal(g.predicate, np.transpose(g.predicate, (1, 0, 3, 2)))
    )


def detect_projection(g: NonlocalGame):
    """Return the projection maps when every supported ``(x, y, a)`` accepts at most one ``b``."""
    accepted = g.predicate.sum(axis=3)
    supported = g.nu > 0
    if np.any(accepted[supported] > 1):
        return None
    f = np.argmax(g.predicate, axis=3).astype(np.int64)
    return ProjectionStructure(f)


def diag_distribution(nu) -> np.ndarray:
    nu = np.asarray(nu, dtype=np.float64)
    if nu.ndim != 2 or nu.shape[0] != nu.shape[1]:
        raise NotSquare("diagonal distribution needs a square joint table")
    d = np.diag(nu).copy()
    total = d.sum()
    if total <= 0:
        raise EmptyDiagonal("question distribution has no mass on the diagonal")
    return d / total


def analyze(g: NonlocalGame, s: Strategy) -> GameReport:
    value = game_value(g, s)
    dsync = None
    if g.square and np.diag(g.nu).sum() > 0:
        dsync = delta_sync(induce_correlation(s), diag_distribution(g.nu))
    sync = g.square and detect_synchronous(g)
    return GameReport(value, dsync, bool(sync), detect_projection(g) is not None, detect_symmetric(g))


# -- built-in games -----------------------------------------------------------

_I2 = np.eye(2, dtype=np.complex128)
PAULI = {
    "I": _I2,
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def _observable_projectors(obs: np.ndarray) -> np.ndarray:
    eye = np.eye(obs.shape[0])
    return np.stack([(eye + obs) / 2, (eye - obs) / 2])


def maximally_entangled(d: int) -> BipartiteState:
    return BipartiteState.from_matrix(np.eye(d) / np.sqrt(d))


def chsh():
    """CHSH game with the Tsirelson-optimal EPR strategy."""
    bits = (0, 1)
    pred = np.zeros((2, 2, 2, 2), dtype=np.int8)
    for x, y, a, b in itertools.product(bits, repeat=4):
        pred[x, y, a, b] = int((a ^ b) == (x & y))
    game = NonlocalGame(bits, bits, bits, bits, np.full((2, 2), 0.25), pred)
    z, xo = PAULI["Z"], PAULI["X"]
    alice = [_observable_projectors(z), _observable_projectors(xo)]
    # EPR in the computational basis: Bob measures transposes; Z and X are real.
    bob = [_observable_projectors((z + xo) / np.sqrt(2)), _observable_projectors((z - xo) / np.sqrt(2))]
    strategy = Strategy(
        maximally_entangled(2),
        MeasurementFamily(bits, bits, np.stack(alice), "projective"),
        MeasurementFamily(bits, bits, np.stack(bob), "projective"),
    )
    return game, strategy


def _kron(*ops):
    out = np.eye(1, dtype=np.complex128)
    for op in ops:
        out = np.kron(out, op)
    return out


# Mermin-Peres square: rows multiply to +I, columns to -I.
MAGIC_SQUARE_CELLS = (
    ((+1, "XI"), (+1, "IX"), (+1, "XX")),
    ((+1, "IZ"), (+1, "ZI"), (+1, "ZZ")),
    ((-1, "XZ"), (-1, "ZX"), (+1, "YY")),
)
MAGIC_SQUARE_LINES = ("r0", "r1", "r2", "c0", "c1", "c2")
MAGIC_SQUARE_BITSTRINGS = tuple("".join(bits) for bits in itertools.product("01", repeat=3))


def _line_cells(line: str):
    k = int(line[1])
    if line[0] == "r":
        return [(k, j) for j in range(3)]
    return [(i, k) for i in range(3)]


def magic_square_observable(i: int, j: int) -> np.ndarray:
    sign, word = MAGIC_SQUARE_CELLS[i][j]
    return sign * _kron(*(PAULI[c] for c in word))


def magic_square():
    """Magic Square as a projection game with its two-EPR Pauli strategy.

    Alice gets a row or column and answers three bits (rows even parity,
    columns odd); Bob gets one cell and answers one bit that must match
    Alice's bit for that cell.
    """
    cells = tuple(f"{i}{j}" for i in range(3) for j in range(3))
    n_a = len(MAGIC_SQUARE_BITSTRINGS)
    nu = np.zeros((6, 9))
    pred = np.zeros((6, 9, n_a, 2), dtype=np.int8)
    for xi, line in enumerate(MAGIC_SQUARE_LINES):
        parity = 0 if line[0] == "r" else 1
        for pos, (i, j) in enumerate(_line_cells(line)):
            yi = cells.index(f"{i}{j}")
            nu[xi, yi] = 1.0 / 18
            for ai, bits in enumerate(MAGIC_SQUARE_BITSTRINGS):
                if sum(map(int, bits)) % 2 != parity:
                    continue
                pred[xi, yi, ai, int(bits[pos])] = 1
    game = NonlocalGame(MAGIC_SQUARE_LINES, cells, MAGIC_SQUARE_BITSTRINGS, (0, 1), nu, pred)

    eye = np.eye(4)
    alice = np.zeros((6, n_a, 4, 4), dtype=np.complex128)
    for xi, line in enumerate(MAGIC_SQUARE_LINES):
        obs = [magic_square_observable(i, j) for i, j in _line_cells(line)]
        for ai, bits in enumerate(MAGIC_SQUARE_BITSTRINGS):
            p = eye.astype(np.complex128)
            for o, bit in zip(obs, bits):
                p = p @ (eye + (-1) ** int(bit) * o) / 2
            alice[xi, ai] = p
    bob = np.zeros((9, 2, 4, 4), dtype=np.complex128)
    for yi, c in enumerate(cells):
        bob[yi] = _observable_projectors(magic_square_observable(int(c[0]), int(c[1])).T)
    strategy = Strategy(
        maximally_entangled(4),
        MeasurementFamily(MAGIC_SQUARE_LINES, MAGIC_SQUARE_BITSTRINGS, alice, "projective"),
        MeasurementFamily(cells, (0, 1), bob, "projective"),
    )
    return game, strategy


BUILTINS = {"chsh": chsh, "magic_square": magic_square}


def builtin_game(name: str):
    """Return ``(game, reference_strategy)`` for a built-in game name."""
    try:
        return BUILTINS[name]()
    except KeyError:
        raise UnknownName(f"unknown built-in game {name!r}; choose from {sorted(BUILTINS)}") from None
