"""States, measurements, strategies and the correlations they induce."""
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _config, _kernels
from .errors import (
    DimensionMismatch,
    InvalidDistribution,
    LabelMismatch,
    NotDensity,
    NotMeasurement,
    NotNormalized,
    NotPSD,
    NotSquare,
)
from .linalg import dagger, eigh, psd_sqrt, reduced_density, transpose_in_basis

KINDS = ("general", "projective", "sub")


def as_distribution(nu, n: int, labels: Sequence = None) -> np.ndarray:
    """Coerce ``nu`` into a dense probability vector of length ``n``.

    Accepts ``None`` or ``"uniform"``, a sequence of weights, or a mapping from
    labels to weights.
    """
    if nu is None or (isinstance(nu, str) and nu == "uniform"):
        return np.full(n, 1.0 / n)
    if isinstance(nu, dict):
        if labels is None:
            raise InvalidDistribution("a label->weight mapping needs the label list")
        index = {str(l): i for i, l in enumerate(labels)}
        vec = np.zeros(n)
        for key, p in nu.items():
            if str(key) not in index:
                raise LabelMismatch(f"unknown label {key!r} in distribution")
            vec[index[str(key)]] = float(p)
        nu = vec
    vec = np.asarray(nu, dtype=np.float64).ravel()
    if vec.size != n:
        raise DimensionMismatch(f"distribution has {vec.size} entries, expected {n}")
    if np.any(vec < 0) or abs(vec.sum() - 1.0) > _config.TOL.distribution:
        raise InvalidDistribution("distribution must be nonnegative and sum to 1")
    return vec


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """Pure state on ``C^{d_a} (x) C^{d_b}``; amplitudes indexed ``i * d_b + j``."""

    d_a: int
    d_b: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if amp.size != self.d_a * self.d_b:
            raise DimensionMismatch(f"{amp.size} amplitudes for dims {self.d_a}x{self.d_b}")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > _config.TOL.normalization:
            raise NotNormalized(f"state has norm {norm:.12g}")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def matrix(self) -> np.ndarray:
        return self.amplitudes.reshape(self.d_a, self.d_b)

    def reduced(self, side="A") -> np.ndarray:
        return reduced_density(self.amplitudes, self.d_a, self.d_b, keep=side)

    @classmethod
    def from_matrix(cls, psi):
        psi = np.asarray(psi, dtype=np.complex128)
        return cls(psi.shape[0], psi.shape[1], psi.ravel())


@dataclass(frozen=True)
class MeasurementReport:
    min_eigenvalues: np.ndarray
    completeness_defect: float
    projectivity_defect: float
    spectral_projectivity: np.ndarray
    flags: tuple

    @property
    def valid(self) -> bool:
        return not self.flags


def _check_elements(elements) -> np.ndarray:
    e = np.asarray(elements, dtype=np.complex128)
    if e.ndim != 3 or e.shape[1] != e.shape[2]:
        raise DimensionMismatch(f"measurement elements must be (k, d, d), got {e.shape}")
    if not np.all(np.isfinite(e)):
        raise NotMeasurement("measurement has non-finite entries")
    return e


def validate(m, kind: str = None) -> MeasurementReport:
    """Report positivity, completeness and projectivity defects; never raises."""
    elements = m.elements if isinstance(m, Measurement) else _check_elements(m)
    kind = kind or (m.kind if isinstance(m, Measurement) else "general")
    tol = _config.TOL
    d = elements.shape[-1]
    herm = 0.5 * (elements + dagger(elements))
    eigs = np.linalg.eigvalsh(herm)
    mins = eigs[:, 0]
    total = elements.sum(axis=0)
    complete = float(np.linalg.norm(total - np.eye(d)))
    sq = elements @ elements - elements
    proj = float(max(np.linalg.norm(s) for s in sq)) if len(sq) else 0.0
    spectral = np.array([np.abs(ev - ev * ev).max() for ev in eigs]) if len(eigs) else np.zeros(0)
    flags = []
    if np.any(mins < -tol.psd) or np.linalg.norm(elements - herm) > tol.hermitian * max(1.0, np.linalg.norm(elements)):
        flags.append("NotPSD")
    if kind == "sub":
        slack = np.linalg.eigvalsh(0.5 * (np.eye(d) - total + (np.eye(d) - total).conj().T))
        if slack.min() < -tol.psd:
            flags.append("NotSubnormalized")
    elif complete > tol.completeness:
        flags.append("NotComplete")
    if kind == "projective" and proj > tol.projective:
        flags.append("NotProjective")
    return MeasurementReport(mins, complete, proj, spectral, tuple(flags))


@dataclass(frozen=True, eq=False)
class Measurement:
    """A POVM, PVM or sub-measurement on ``C^d``; one element per outcome."""

    elements: np.ndarray
    outcomes: tuple = None
    kind: str = "general"
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        e = _check_elements(self.elements)
        object.__setattr__(self, "elements", e)
        if self.outcomes is None:
            object.__setattr__(self, "outcomes", tuple(range(len(e))))
        else:
            object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if len(self.outcomes) != len(e):
            raise DimensionMismatch("one element per outcome label is required")
        if self.kind not in KINDS:
            raise ValueError(f"unknown measurement kind {self.kind!r}")
        if self.check:
            report = validate(self)
            if report.flags:
                raise NotMeasurement(f"invalid {self.kind} measurement: {', '.join(report.flags)}")

    @property
    def dim(self) -> int:
        return self.elements.shape[-1]

    def __len__(self):
        return len(self.elements)


@dataclass(frozen=True, eq=False)
class MeasurementFamily:
    """Measurements indexed by question, sharing outcome labels and dimension.

    ``elements`` has shape ``(questions, outcomes, d, d)``.
    """

    questions: tuple
    outcomes: tuple
    elements: np.ndarray
    kind: str = "general"
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        e = np.asarray(self.elements, dtype=np.complex128)
        if e.ndim != 4 or e.shape[2] != e.shape[3]:
            raise DimensionMismatch(f"family elements must be (X, A, d, d), got {e.shape}")
        object.__setattr__(self, "elements", e)
        object.__setattr__(self, "questions", tuple(self.questions))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if e.shape[:2] != (len(self.questions), len(self.outcomes)):
            raise DimensionMismatch("element array does not match question/outcome labels")
        if self.kind not in KINDS:
            raise ValueError(f"unknown measurement kind {self.kind!r}")
        if self.check:
            for x, q in zip(self.questions, e):
                report = validate(q, self.kind)
                if report.flags:
                    raise NotMeasurement(f"question {x!r}: {', '.join(report.flags)}")

    @property
    def dim(self) -> int:
        return self.elements.shape[-1]

    def index(self, x) -> int:
        try:
            return self.questions.index(x)
        except ValueError:
            raise LabelMismatch(f"unknown question {x!r}") from None

    def __getitem__(self, x) -> Measurement:
        return Measurement(self.elements[self.index(x)], self.outcomes, self.kind, check=False)

    def __len__(self):
        return len(self.questions)

    @classmethod
    def from_measurements(cls, questions, measurements: Sequence[Measurement], kind=None, check=True):
        measurements = list(measurements)
        if not measurements:
            raise DimensionMismatch("a family needs at least one question")
        outcomes = measurements[0].outcomes
        if any(m.outcomes != outcomes for m in measurements):
            raise LabelMismatch("all questions in a family must share outcome labels")
        kind = kind or measurements[0].kind
        return cls(tuple(questions), outcomes, np.stack([m.elements for m in measurements]), kind, check)

    def replace(self, elements, kind=None, check=True) -> "MeasurementFamily":
        return MeasurementFamily(self.questions, self.outcomes, elements, kind or self.kind, check)

    def transpose(self, basis) -> "MeasurementFamily":
        """Family of transposes taken in the orthonormal basis ``basis``."""
        return self.replace(transpose_in_basis(self.elements, basis), check=False)


@dataclass(frozen=True, eq=False)
class Strategy:
    state: BipartiteState
    alice: MeasurementFamily
    bob: MeasurementFamily

    def __post_init__(self):
        if self.alice.dim != self.state.d_a or self.bob.dim != self.state.d_b:
            raise DimensionMismatch(
                f"measurement dims ({self.alice.dim}, {self.bob.dim}) do not match "
                f"state dims ({self.state.d_a}, {self.state.d_b})"
            )

    def family(self, side) -> MeasurementFamily:
        return self.alice if side in ("A", "a", 0) else self.bob


@dataclass(frozen=True, eq=False)
class SymmetricStrategy:
    """``sum_i sqrt(w_i) |u_i>|u_i>`` with Bob measuring transposes in the ``u`` basis."""

    basis: np.ndarray
    weights: np.ndarray
    family: MeasurementFamily

    def __post_init__(self):
        u = np.asarray(self.basis, dtype=np.complex128)
        w = np.asarray(self.weights, dtype=np.float64)
        d = self.family.dim
        if u.shape != (d, d) or w.shape != (d,):
            raise DimensionMismatch("basis/weights do not match the family dimension")
        if np.linalg.norm(u.conj().T @ u - np.eye(d)) > _config.TOL.unitary * 10:
            raise DimensionMismatch("basis is not unitary")
        if np.any(w < 0) or abs(w.sum() - 1.0) > _config.TOL.normalization:
            raise NotDensity("Schmidt weights must be nonnegative and sum to 1")
        object.__setattr__(self, "basis", u)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.family.dim

    @property
    def rho(self) -> np.ndarray:
        u = self.basis
        return (u * self.weights) @ u.conj().T

    @property
    def sqrt_rho(self) -> np.ndarray:
        u = self.basis
        return (u * np.sqrt(self.weights)) @ u.conj().T

    @property
    def state(self) -> BipartiteState:
        u = self.basis
        return BipartiteState.from_matrix((u * np.sqrt(self.weights)) @ u.T)

    def bob_family(self) -> MeasurementFamily:
        return self.family.transpose(self.basis)

    def to_strategy(self) -> Strategy:
        return Strategy(self.state, self.family, self.bob_family())

    def self_consistency(self, nu=None) -> float:
        """``E_x sum_a <psi| A^x_a (x) (A^x_a)^T |psi>`` via the tracial form."""
        nu = as_distribution(nu, len(self.family), self.family.questions)
        s = self.sqrt_rho
        m = self.family.elements @ s
        per_x = np.einsum("xaij,xaji->x", m, m).real
        return float(nu @ per_x)


@dataclass(frozen=True, eq=False)
class Correlation:
    """Table ``C[x, y, a, b]`` of real numbers with its four label lists."""

    x_labels: tuple
    y_labels: tuple
    a_labels: tuple
    b_labels: tuple
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.float64)
        shape = (len(self.x_labels), len(self.y_labels), len(self.a_labels), len(self.b_labels))
        if t.shape != shape:
            raise DimensionMismatch(f"table shape {t.shape} does not match labels {shape}")
        object.__setattr__(self, "table", t)
        for name in ("x_labels", "y_labels", "a_labels", "b_labels"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def is_full(self, tol: float = None) -> bool:
        tol = _config.TOL.completeness if tol is None else tol
        return bool(np.all(np.abs(self.table.sum(axis=(2, 3)) - 1.0) <= tol))

    def in_range(self, tol: float = None) -> bool:
        tol = _config.TOL.normalization if tol is None else tol
        return bool(np.all(self.table >= -tol) and np.all(self.table <= 1 + tol))


def pair_operators(state_matrix: np.ndarray, alice_ops: np.ndarray, bob_ops: np.ndarray) -> np.ndarray:
    """``out[x, y, a, b] = <psi| alice[x, a] (x) bob[y, b] |psi>`` (real part).

    ``state_matrix`` is the ``d_a x d_b`` amplitude matrix of ``psi``.
    """
    psi = np.asarray(state_matrix, dtype=np.complex128)
    left = psi.conj().T @ alice_ops @ psi
    re, im = _kernels.correlation_tensor(left, bob_ops)
    worst = float(np.abs(im).max()) if im.size else 0.0
    if worst > _config.TOL.imaginary:
        raise NotPSD(f"correlation has imaginary residue {worst:.3e}; operators are not Hermitian")
    return re


def induce_correlation(s) -> Correlation:
    """Correlation ``<psi| A^x_a (x) B^y_b |psi>`` induced by a strategy."""
    if isinstance(s, SymmetricStrategy):
        s = s.to_strategy()
    table = pair_operators(s.state.matrix, s.alice.elements, s.bob.elements)
    return Correlation(s.alice.questions, s.bob.questions, s.alice.outcomes, s.bob.outcomes, table)


def delta_sync(obj, nu=None) -> float:
    """Synchronicity defect ``E_{x~nu} sum_{a != b} C[x, x, a, b]``."""
    if isinstance(obj, SymmetricStrategy):
        return max(0.0, 1.0 - obj.self_consistency(nu))
    corr = obj if isinstance(obj, Correlation) else induce_correlation(obj)
    if corr.x_labels != corr.y_labels or corr.a_labels != corr.b_labels:
        raise NotSquare("delta_sync needs X = Y and A = B")
    nu = as_distribution(nu, len(corr.x_labels), corr.x_labels)
    diag = np.einsum("xxab->xab", corr.table)
    off = diag.sum(axis=(1, 2)) - np.einsum("xaa->x", diag)
    return float(nu @ off)


def tracial_eval(rho, x, y, basis) -> complex:
    """``Tr(X rho^{1/2} Y^T rho^{1/2})`` with the transpose taken in ``basis``."""
    rho = np.asarray(rho, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if not (rho.shape == x.shape == y.shape) or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch("rho, X and Y must be square of the same size")
    s = psd_sqrt(rho)
    return complex(np.trace(x @ s @ transpose_in_basis(y, basis) @ s))


def _density_spectrum(rho):
    w, u = eigh(rho)
    tol = _config.TOL
    if w[-1] < -tol.psd:
        raise NotDensity(f"density has negative eigenvalue {w[-1]:.3e}")
    if abs(w.sum() - 1.0) > tol.normalization:
        raise NotDensity(f"density has trace {w.sum():.12g}")
    w = np.clip(w, 0.0, None)
    return w / w.sum(), u


def canonical_purification(rho):
    """Return ``(state, basis)`` with ``state = sum_i sqrt(l_i) |u_i>|u_i>``."""
    w, u = _density_spectrum(rho)
    return BipartiteState.from_matrix((u * np.sqrt(w)) @ u.T), u


def symmetrize_side(s: Strategy, side="A") -> SymmetricStrategy:
    """Canonical purification of one side's reduced density, with that side's family."""
    rho = s.state.reduced(side)
    family = s.family(side)
    if family.dim != rho.shape[0]:
        raise DimensionMismatch("family dimension does not match the reduced density")
    w, u = _density_spectrum(rho)
    return SymmetricStrategy(u, w, family)


def projective_family(projectors, questions=None, outcomes=None) -> MeasurementFamily:
    """Convenience constructor for a projective family from a nested array."""
    e = np.asarray(projectors, dtype=np.complex128)
    questions = tuple(range(e.shape[0])) if questions is None else questions
    outcomes = tuple(range(e.shape[1])) if outcomes is None else outcomes
    return MeasurementFamily(questions, outcomes, e, "projective")
