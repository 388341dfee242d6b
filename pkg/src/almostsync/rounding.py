"""Rounding almost-synchronous strategies to mixtures of PME strategies.

The pipeline for a symmetric strategy ``(psi, A)`` with reduced density ``rho``:

1. round each ``A^x`` to a projective ``B^x`` against ``rho``;
2. cut ``rho`` into its threshold projectors ``P_k`` (the spectral ladder);
3. compress ``B^x`` to each ``range(P_k)`` and round again against the
   maximally mixed state there.

Every integral over the threshold parameter is evaluated as an exact finite
sum, because every integrand is constant between consecutive eigenvalues.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import _config, _kernels
from .errors import (
    DimensionMismatch,
    DimensionOverflow,
    LabelMismatch,
    NotBinary,
    NotDensity,
    NotProjectionGame,
    NotProjective,
    OverlappingSets,
    SingularRho,
)
from .games import NonlocalGame, detect_projection, game_value
from .linalg import complete_to_unitary, eigh, pinv_sqrt, psd_sqrt, spectral_map, threshold
from .strategy import (
    BipartiteState,
    Correlation,
    Measurement,
    MeasurementFamily,
    Strategy,
    SymmetricStrategy,
    as_distribution,
    delta_sync,
    induce_correlation,
    pair_operators,
    symmetrize_side,
    validate,
)


def _map(fn, items, workers):
    items = list(items)
    if workers and workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# -- spectral ladder ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralLadder:
    """Threshold projectors ``P_k = chi_{>= l_k}(rho)`` of a density.

    ``basis`` holds eigenvectors of ``rho`` for its positive eigenvalues in
    non-increasing order, so ``P_k`` projects onto the first ``ranks[k]``
    columns.
    """

    breakpoints: np.ndarray
    ranks: np.ndarray
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def lengths(self) -> np.ndarray:
        """Lebesgue length of the threshold interval on which ``P_k`` is active."""
        nxt = np.append(self.breakpoints[1:], 0.0)
        return self.breakpoints - nxt

    @property
    def weights(self) -> np.ndarray:
        return self.ranks * self.lengths

    def __len__(self):
        return len(self.breakpoints)

    def isometry(self, k: int) -> np.ndarray:
        return self.basis[:, : self.ranks[k]]

    def projector(self, k: int) -> np.ndarray:
        v = self.isometry(k)
        return v @ v.conj().T

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for k, length in enumerate(self.lengths):
            out += length * self.projector(k)
        return out


def build_ladder(rho) -> SpectralLadder:
    """Spectral ladder of a density, merging eigenvalues closer than the degeneracy tolerance."""
    tol = _config.TOL
    w, v = eigh(rho)
    if w[-1] < -tol.psd:
        raise NotDensity(f"density has negative eigenvalue {w[-1]:.3e}")
    if abs(w.sum() - 1.0) > tol.normalization:
        raise NotDensity(f"density has trace {w.sum():.12g}")
    positive = w > tol.degenerate
    w, v = w[positive], v[:, positive]
    groups = []
    for i, lam in enumerate(w):
        if groups and groups[-1][-1][1] - lam <= tol.degenerate:
            groups[-1].append((i, lam))
        else:
            groups.append([(i, lam)])
    breakpoints = np.array([np.mean([lam for _, lam in g]) for g in groups])
    ranks = np.array([g[-1][0] + 1 for g in groups], dtype=np.int64)
    v = np.array(v, dtype=np.complex128)
    start = 0
    for stop in ranks:
        v[:, start:stop] = _canonical_frame(v[:, start:stop])
        start = stop
    return SpectralLadder(breakpoints, ranks, v)


def _canonical_frame(g: np.ndarray) -> np.ndarray:
    """Basis of ``range(g)`` closest to the standard vectors it overlaps most."""
    m = g.shape[1]
    picks = np.sort(np.argsort(-np.sum(np.abs(g) ** 2, axis=1), kind="stable")[:m])
    u, _, vh = np.linalg.svd(g[picks].conj().T)
    return g @ (u @ vh)


# -- orthonormalization ---------------------------------------------------------


def _as_elements(q):
    if isinstance(q, Measurement):
        return q.elements, q.outcomes
    e = np.asarray(q, dtype=np.complex128)
    return e, tuple(range(len(e)))


def orthonormalize(q, rho) -> Measurement:
    """Round a measurement to a projective one on the same space.

    Outcomes are processed by decreasing ``Tr(Q_a rho)``. Each claims the
    part of ``chi_{>=1/2}(Q_a)`` orthogonal to everything already claimed.
    The remaining space is handed out one direction at a time to the outcome
    whose compressed element has the largest top eigenvalue. A projective
    input is returned unchanged.
    """
    elements, outcomes = _as_elements(q)
    k, d = elements.shape[0], elements.shape[-1]
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (d, d):
        raise DimensionMismatch(f"density of shape {rho.shape} vs measurement dim {d}")
    if not validate(elements, "projective").flags:
        return Measurement(elements, outcomes, "projective", check=False)

    mass = np.einsum("aij,ji->a", elements, rho).real
    order = sorted(range(k), key=lambda a: (-mass[a], a))
    cols = [np.zeros((d, 0), dtype=np.complex128) for _ in range(k)]
    free = np.eye(d, dtype=np.complex128)  # orthonormal basis of the unclaimed space
    for a in order:
        if free.shape[1] == 0:
            break
        dominant = spectral_map(elements[a], threshold(0.5))
        w, u = np.linalg.eigh(free.conj().T @ dominant @ free)
        take = w > _config.TOL.rank
        cols[a] = np.hstack([cols[a], free @ u[:, take]])
        free = free @ u[:, ~take]
    while free.shape[1]:
        best = None
        for a in range(k):
            w, u = np.linalg.eigh(free.conj().T @ elements[a] @ free)
            if best is None or w[-1] > best[0] + 1e-15:
                best = (w[-1], a, u)
        _, a, u = best
        cols[a] = np.hstack([cols[a], free @ u[:, -1:]])
        free = free @ u[:, :-1]
    proj = np.stack([c @ c.conj().T for c in cols])
    return Measurement(proj, outcomes, "projective", check=False)


def closeness(p, q, rho) -> float:
    """``sum_a Tr((P_a - Q_a)^2 rho)``."""
    p = p.elements if isinstance(p, Measurement) else np.asarray(p)
    q = q.elements if isinstance(q, Measurement) else np.asarray(q)
    diff = p - q
    return float(np.einsum("aij,ajk,ki->", diff, diff, rho).real)


# -- Naimark dilation -------------------------------------------------------------


def _dilate_family(family: MeasurementFamily, cap: int) -> MeasurementFamily:
    n_x, m, d, _ = family.elements.shape
    big = d * m
    if big > cap:
        raise DimensionOverflow(f"dilated dimension {big} exceeds cap {cap}")
    out = np.zeros((n_x, m, big, big), dtype=np.complex128)
    first = np.arange(d) * m  # positions of |j>|0>
    rest = np.setdiff1d(np.arange(big), first)
    for xi in range(n_x):
        roots = np.stack([psd_sqrt(e) for e in family.elements[xi]])
        v = roots.transpose(1, 0, 2).reshape(big, d)
        v = v @ pinv_sqrt(v.conj().T @ v)  # absorb completeness round-off
        u = complete_to_unitary(v)
        w = np.empty_like(u)
        w[:, first] = u[:, :d]
        w[:, rest] = u[:, d:]
        for a in range(m):
            rows = w[a::m]
            out[xi, a] = rows.conj().T @ rows
    return family.replace(out, kind="projective", check=False)


def naimark_dilate(s: Strategy, cap: int = None) -> Strategy:
    """Projective strategy on ``(H_A (x) C^|A|) (x) (H_B (x) C^|B|)`` with the same correlation.

    The auxiliary state is ``|0>|0>``. Each isometry
    ``|phi>|0> -> sum_a sqrt(A_a)|phi>|a>`` is completed to a unitary ``W``
    and the projective elements are ``W^dag (Id (x) |a><a|) W``.
    """
    cap = _config.TOL.dilation_cap if cap is None else cap
    alice = _dilate_family(s.alice, cap)
    bob = _dilate_family(s.bob, cap)
    m_a, m_b = len(s.alice.outcomes), len(s.bob.outcomes)
    psi = np.zeros((s.state.d_a * m_a, s.state.d_b * m_b), dtype=np.complex128)
    psi[::m_a, ::m_b] = s.state.matrix
    return Strategy(BipartiteState.from_matrix(psi), alice, bob)


# -- commutation with the ladder ------------------------------------------------


def _require_projective(family: MeasurementFamily):
    for x, q in zip(family.questions, family.elements):
        if validate(q, "projective").flags:
            raise NotProjective(f"question {x!r} is not a projective measurement")


def commutation_defect(family: MeasurementFamily, ladder: SpectralLadder, nu=None) -> float:
    """``int E_x sum_a ||B^x_a P_l - P_l B^x_a||_F^2 dl`` evaluated exactly.

    Uses ``||[B, P]||_F^2 = 2 Tr(B^2 P) - 2 Tr(BPBP)`` in the ladder basis,
    so each step only needs prefix sums of one matrix per element.
    """
    _require_projective(family)
    if family.dim != ladder.dim:
        raise DimensionMismatch("family and ladder live on different spaces")
    nu = as_distribution(nu, len(family), family.questions)
    v = ladder.basis
    ranks, lengths = ladder.ranks, ladder.lengths
    total = 0.0
    for xi, p_x in enumerate(nu):
        if p_x == 0:
            continue
        for elem in family.elements[xi]:
            bv = elem @ v
            diag = np.concatenate([[0.0], np.cumsum(np.sum(np.abs(bv) ** 2, axis=0))])
            block = _kernels.prefix_block_sums(np.abs(v.conj().T @ bv) ** 2)
            per_step = 2.0 * (diag[ranks] - block[ranks, ranks])
            total += p_x * float(lengths @ per_step)
    return max(total, 0.0)


def fourier_unitaries(family: MeasurementFamily) -> np.ndarray:
    """``U^x_b = sum_a exp(2 pi i a b / m) B^x_a`` for every question and ``b``."""
    m = len(family.outcomes)
    phases = np.exp(2j * np.pi * np.outer(np.arange(m), np.arange(m)) / m)  # [b, a]
    return np.einsum("ba,xaij->xbij", phases, family.elements)


def commutation_defect_fourier(family: MeasurementFamily, ladder: SpectralLadder, nu=None) -> float:
    """Same quantity as :func:`commutation_defect` through the Fourier unitaries, densely."""
    nu = as_distribution(nu, len(family), family.questions)
    u = fourier_unitaries(family)
    total = 0.0
    for k, length in enumerate(ladder.lengths):
        p = ladder.projector(k)
        comm = u @ p - p @ u
        per_x = np.mean(np.sum(np.abs(comm) ** 2, axis=(2, 3)), axis=1)
        total += length * float(nu @ per_x)
    return total


def connes_integral(rho, sigma):
    """Both sides of the threshold-projector inequality for PSD ``rho``, ``sigma``.

    Returns ``(lhs, rhs)`` with ``lhs = int ||chi(rho^{1/2}) - chi(sigma^{1/2})||_F^2 dl``
    (thresholds at ``sqrt(l)``) and
    ``rhs = ||sigma^{1/2} - rho^{1/2}||_F ||sigma^{1/2} + rho^{1/2}||_F``.
    """
    wr, ur = eigh(rho)
    ws, us = eigh(sigma)
    wr, ws = np.clip(wr, 0, None), np.clip(ws, 0, None)
    # chi_{>=sqrt(l)}(rho^{1/2}) = chi_{>=l}(rho): breakpoints are the eigenvalues themselves
    points = np.unique(np.concatenate([wr, ws, [0.0]]))[::-1]
    block = _kernels.prefix_block_sums(np.abs(ur.conj().T @ us) ** 2)
    lhs = 0.0
    for hi, lo in zip(points[:-1], points[1:]):
        mid = 0.5 * (hi + lo)
        r, s = int(np.sum(wr > mid)), int(np.sum(ws > mid))
        lhs += (hi - lo) * (r + s - 2.0 * block[r, s])
    sr = (ur * np.sqrt(wr)) @ ur.conj().T
    ss = (us * np.sqrt(ws)) @ us.conj().T
    rhs = float(np.linalg.norm(ss - sr) * np.linalg.norm(ss + sr))
    return float(lhs), rhs


# -- PME decomposition ---------------------------------------------------------------


@dataclass(frozen=True)
class DecompositionDiagnostics:
    delta_sync_in: float
    delta_prime: float
    commutation_defect: float
    residual: float
    reconstruction_error: float
    exact_path: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class PMEDecomposition:
    """Weighted PME strategies, one per ladder step.

    ``steps[k]`` is a projective family on ``C^{r_k}`` expressed in the
    coordinates given by ``ladder.isometry(k)``; its state is the maximally
    entangled state of that dimension.
    """

    ladder: SpectralLadder
    steps: tuple
    rounded: MeasurementFamily
    diagnostics: DecompositionDiagnostics

    @property
    def weights(self) -> np.ndarray:
        return self.ladder.weights

    @property
    def ranks(self) -> np.ndarray:
        return self.ladder.ranks

    @property
    def questions(self) -> tuple:
        return self.rounded.questions

    def embedded(self, k: int) -> np.ndarray:
        """Step ``k`` elements pushed forward into the ambient space (``V A V^dag``)."""
        v = self.ladder.isometry(k)
        return v @ self.steps[k].elements @ v.conj().T


def _commutes_with(family: MeasurementFamily, rho) -> bool:
    comm = family.elements @ rho - rho @ family.elements
    return float(np.abs(comm).max()) <= _config.TOL.projective


def residual(d: PMEDecomposition, original: SymmetricStrategy, nu=None) -> float:
    """``E_x sum_a int Tr((A^x_a - A^{l,x}_a)^2 rho_l) dmu(l)`` as an exact finite sum."""
    a = original.family.elements
    if original.dim != d.ladder.dim or a.shape[:2] != d.rounded.elements.shape[:2]:
        raise DimensionMismatch("decomposition does not match the strategy")
    nu = as_distribution(nu, len(original.family), original.family.questions)
    total = 0.0
    for k, length in enumerate(d.ladder.lengths):
        v = d.ladder.isometry(k)
        diff = a @ v - v @ d.steps[k].elements
        per_x = np.sum(np.abs(diff) ** 2, axis=(1, 2, 3))
        total += length * float(nu @ per_x)
    return total


def pme_decompose(s: SymmetricStrategy, nu=None, workers: int = None) -> PMEDecomposition:
    """Approximate a symmetric strategy by a convex sum of PME strategies."""
    family = s.family
    nu = as_distribution(nu, len(family), family.questions)
    rho = s.rho
    d_in = delta_sync(s, nu)
    exact = (
        d_in <= 1e-12
        and not any(validate(q, "projective").flags for q in family.elements)
        and _commutes_with(family, rho)
    )
    if exact:
        rounded = family.replace(family.elements, kind="projective", check=False)
    else:
        elems = _map(lambda q: orthonormalize(q, rho).elements, family.elements, workers)
        rounded = family.replace(np.stack(elems), kind="projective", check=False)
    d_prime = delta_sync(SymmetricStrategy(s.basis, s.weights, rounded), nu)

    ladder = build_ladder(rho)

    def round_step(k):
        v = ladder.isometry(k)
        r = v.shape[1]
        compressed = v.conj().T @ rounded.elements @ v
        mixed = np.eye(r) / r
        out = np.stack([orthonormalize(q, mixed).elements for q in compressed])
        return family.replace(out, kind="projective", check=False)

    steps = tuple(_map(round_step, range(len(ladder)), workers))
    comm = commutation_defect(rounded, ladder, nu)
    rec = float(np.linalg.norm(ladder.reconstruct() - rho))
    provisional = PMEDecomposition(ladder, steps, rounded, DecompositionDiagnostics(d_in, d_prime, comm, 0.0, rec, exact))
    res = residual(provisional, s, nu)
    diag = DecompositionDiagnostics(float(d_in), float(d_prime), float(comm), float(res), rec, exact)
    return PMEDecomposition(ladder, steps, rounded, diag)


def step_residuals(d: PMEDecomposition, original: SymmetricStrategy, nu=None) -> np.ndarray:
    """Per-step contributions to :func:`residual` (already weighted)."""
    nu = as_distribution(nu, len(original.family), original.family.questions)
    out = []
    for k, length in enumerate(d.ladder.lengths):
        v = d.ladder.isometry(k)
        diff = original.family.elements @ v - v @ d.steps[k].elements
        out.append(length * float(nu @ np.sum(np.abs(diff) ** 2, axis=(1, 2, 3))))
    return np.array(out)


# -- correlations of the mixture -----------------------------------------------------


def step_correlation(step: MeasurementFamily) -> Correlation:
    """Correlation of the PME strategy ``(phi_r, A, A^T)``: ``Tr(A^x_a A^y_b) / r``."""
    r = step.dim
    phi = np.eye(r) / np.sqrt(r)
    table = pair_operators(phi, step.elements, np.swapaxes(step.elements, -1, -2))
    return Correlation(step.questions, step.questions, step.outcomes, step.outcomes, table)


@dataclass(frozen=True, eq=False)
class MixtureResult:
    correlation: Correlation
    l1_gap: float
    step_correlations: tuple
    step_delta_sync: np.ndarray


def _joint(tilde_nu, n, labels):
    if tilde_nu is None or (isinstance(tilde_nu, str) and tilde_nu == "uniform"):
        return np.full((n, n), 1.0 / n**2)
    if isinstance(tilde_nu, str) and tilde_nu == "diagonal":
        return np.eye(n) / n
    t = np.asarray(tilde_nu, dtype=np.float64)
    if t.shape != (n, n):
        raise DimensionMismatch(f"joint distribution must be {n}x{n}")
    as_distribution(t.ravel(), n * n)
    return t


def mixture_correlation(d: PMEDecomposition, original: Strategy, tilde_nu=None) -> MixtureResult:
    """Mix the step correlations with the ladder weights and measure the l1 gap to ``original``."""
    for fam in (original.alice, original.bob):
        _require_projective(fam)
    if original.alice.questions != d.questions or original.bob.questions != d.questions:
        raise LabelMismatch("original strategy must be square on the decomposition's questions")
    n = len(d.questions)
    joint = _joint(tilde_nu, n, d.questions)
    target = induce_correlation(original)
    steps = tuple(step_correlation(st) for st in d.steps)
    mixed = sum(w * c.table for w, c in zip(d.weights, steps))
    gap = float(np.einsum("xy,xyab->", joint, np.abs(target.table - mixed)))
    uniform = np.full(n, 1.0 / n)
    syncs = np.array([delta_sync(c, uniform) for c in steps])
    corr = Correlation(d.questions, d.questions, target.a_labels, target.b_labels, mixed)
    return MixtureResult(corr, gap, steps, syncs)


# -- projection games ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProjectionRoundResult:
    decomposition: PMEDecomposition
    mixture_value: float
    step_values: np.ndarray
    epsilon: float
    alice_consistency: float
    bob_consistency: float
    consistency_ok: bool
    symmetric_alice: SymmetricStrategy
    dilated: Strategy


def bob_submeasurements(g: NonlocalGame, bob: MeasurementFamily) -> MeasurementFamily:
    """``B^x_a = E_{y ~ nu_x} sum_b D(a,b|x,y) B^y_b`` indexed by Alice's questions."""
    cond = np.array([g.conditional(xi) for xi in range(len(g.x_labels))])
    elems = np.einsum("xy,xyab,ybij->xaij", cond, g.predicate.astype(np.float64), bob.elements)
    return MeasurementFamily(g.x_labels, g.a_labels, elems, "sub", check=False)


def aligned_partners(state: BipartiteState, alice_basis: np.ndarray) -> np.ndarray:
    """Bob-side vectors ``f_i`` with ``psi = sum_i sqrt(l_i) e_i (x) f_i`` for eigenvectors ``e_i`` of ``rho_A``."""
    f = np.conj(state.matrix.conj().T @ alice_basis)
    return f @ pinv_sqrt(f.conj().T @ f, tol=0.0)


def step_game_values(g: NonlocalGame, d: PMEDecomposition, state: BipartiteState, bob: MeasurementFamily) -> np.ndarray:
    """Game value of each step strategy against the original Bob measurements.

    The step state is maximally entangled on ``range(P_k)`` paired with the
    matching Schmidt partners on Bob's side.
    """
    partners = aligned_partners(state, d.ladder.basis)
    values = []
    for k in range(len(d.ladder)):
        v = d.ladder.isometry(k)
        r = v.shape[1]
        phi = v @ partners[:, :r].T / np.sqrt(r)
        corr = pair_operators(phi, d.embedded(k), bob.elements)
        values.append(float(np.einsum("xy,xyab,xyab->", g.nu, g.predicate, corr)))
    return np.array(values)


def projection_round(g: NonlocalGame, s: Strategy, workers: int = None, cap: int = None) -> ProjectionRoundResult:
    """Round Alice's side of a strategy for a projection game to a PME mixture."""
    if detect_projection(g) is None:
        raise NotProjectionGame("some supported (x, y, a) accepts more than one answer b")
    return round_alice(g, s, workers, cap)


def round_alice(g: NonlocalGame, s: Strategy, workers: int = None, cap: int = None) -> ProjectionRoundResult:
    """The projection-game pipeline without the projection check."""
    dilated = naimark_dilate(s, cap)
    eps = max(0.0, 1.0 - game_value(g, dilated))
    nu_a = g.marginal("A")
    sub = bob_submeasurements(g, dilated.bob)
    alice_sym = symmetrize_side(dilated, "A")
    rho_b = dilated.state.reduced("B")
    sb = psd_sqrt(rho_b)
    m = sub.elements @ sb
    bob_cons = float(nu_a @ np.einsum("xaij,xaji->x", m, m).real)
    alice_cons = alice_sym.self_consistency(nu_a)
    ok = alice_cons >= (1.0 - eps) ** 2 - _config.TOL.slack
    decomposition = pme_decompose(alice_sym, nu_a, workers)
    values = step_game_values(g, decomposition, dilated.state, dilated.bob)
    mixture = float(decomposition.weights @ values)
    return ProjectionRoundResult(
        decomposition, mixture, values, eps, alice_cons, bob_cons, bool(ok), alice_sym, dilated
    )


# -- lifting and rigidity functionals ----------------------------------------------------------


def lift_measurements(d: PMEDecomposition, per_step, rho) -> MeasurementFamily:
    """Glue per-step measurements into one family on ``supp(rho)``.

    ``M^y_b = rho^{-1/2} (sum_k len_k V_k M^{(k),y}_b V_k^dag) rho^{-1/2}``.
    ``per_step[k]`` is either a :class:`MeasurementFamily` on ``C^{r_k}`` or an
    array of shape ``(Y, B, r_k, r_k)``.
    """
    ladder = d.ladder
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (ladder.dim, ladder.dim):
        raise DimensionMismatch("density does not match the ladder")
    if np.linalg.norm(ladder.reconstruct() - rho) > 1e3 * _config.TOL.reconstruction:
        raise SingularRho("ladder was not built from this density")
    if len(per_step) != len(ladder):
        raise DimensionMismatch(f"{len(per_step)} step families for {len(ladder)} ladder steps")
    template = per_step[0] if isinstance(per_step[0], MeasurementFamily) else None
    inner = None
    for k, (fam, length) in enumerate(zip(per_step, ladder.lengths)):
        e = fam.elements if isinstance(fam, MeasurementFamily) else np.asarray(fam, dtype=np.complex128)
        v = ladder.isometry(k)
        if e.shape[-1] != v.shape[1]:
            raise DimensionMismatch(f"step {k} measurement has dim {e.shape[-1]}, expected {v.shape[1]}")
        term = length * (v @ e @ v.conj().T)
        inner = term if inner is None else inner + term
    r = pinv_sqrt(rho)
    lifted = r @ inner @ r
    lifted = 0.5 * (lifted + np.conj(np.swapaxes(lifted, -1, -2)))
    full_rank = ladder.ranks[-1] == ladder.dim
    kind = "general" if full_rank else "sub"
    questions = template.questions if template else tuple(range(lifted.shape[0]))
    outcomes = template.outcomes if template else tuple(range(lifted.shape[1]))
    return MeasurementFamily(questions, outcomes, lifted, kind, check=False)


def commutator_defect(s: SymmetricStrategy, x0, x1) -> float:
    """``Tr([A^0, A^1]^dag [A^0, A^1] rho)`` for binary observables ``A^x = A^x_0 - A^x_1``."""
    fam = s.family
    if len(fam.outcomes) != 2:
        raise NotBinary("commutator defect needs two-outcome measurements")
    obs = []
    for x in (x0, x1):
        q = fam.elements[fam.index(x)]
        if validate(q, "projective").flags:
            raise NotProjective(f"question {x!r} is not projective")
        obs.append(q[0] - q[1])
    k = obs[0] @ obs[1] - obs[1] @ obs[0]
    return float(np.trace(k.conj().T @ k @ s.rho).real)


def global_consistency(s: Strategy, m: MeasurementFamily, p, g_sets) -> float:
    """``E_{(x,y)~p} sum_a <psi| A^x_a (x) M^y_[g_xy(a)] |psi>``.

    ``g_sets`` is a 0/1 array indexed ``[x, y, a, b]`` marking ``b in g_xy(a)``.
    """
    sets = np.asarray(g_sets)
    n_x, n_y = len(s.alice.questions), len(m.questions)
    shape = (n_x, n_y, len(s.alice.outcomes), len(m.outcomes))
    if sets.shape != shape:
        raise DimensionMismatch(f"subset table has shape {sets.shape}, expected {shape}")
    if np.any(sets.sum(axis=2) > 1):
        raise OverlappingSets("the sets g_xy(a) must be pairwise disjoint for each (x, y)")
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (n_x, n_y):
        raise DimensionMismatch(f"joint distribution must have shape {(n_x, n_y)}")
    as_distribution(p.ravel(), p.size)
    if s.state.d_b != m.dim:
        raise DimensionMismatch("Bob-side family does not match the state")
    corr = pair_operators(s.state.matrix, s.alice.elements, m.elements)
    return float(np.einsum("xy,xyab,xyab->", p, sets.astype(np.float64), corr))
