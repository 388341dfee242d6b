"""Random instance generators and the invariant suite behind ``verify``.

Each check returns a :class:`CheckResult` whose ``margin`` is the smallest
slack observed (bound minus measured value); a check passes when the margin
is at least ``-tolerance``.
"""
from dataclasses import dataclass
import time

import numpy as np

from . import _config
from .games import builtin_game, game_value, game_value_direct
from .lab import NOISE_KINDS, NoiseModel, generate, sweep_row
from .linalg import psd_sqrt, pinv_sqrt
from .rounding import (
    build_ladder,
    connes_integral,
    lift_measurements,
    mixture_correlation,
    naimark_dilate,
    pme_decompose,
)
from .strategy import (
    BipartiteState,
    MeasurementFamily,
    Strategy,
    delta_sync,
    induce_correlation,
    pair_operators,
    symmetrize_side,
    validate,
)

SWEEP_LEVELS = (0.5, 0.2, 0.1, 0.05, 0.02, 0.0)


# -- random instances ---------------------------------------------------------------------


def random_unitary(d: int, rng) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_psd(d: int, rng, rank: int = None) -> np.ndarray:
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    return g @ g.conj().T


def random_density(d: int, rng, rank: int = None) -> np.ndarray:
    p = random_psd(d, rng, rank)
    return p / np.trace(p).real


def random_state(d_a: int, d_b: int, rng) -> BipartiteState:
    z = rng.standard_normal((d_a, d_b)) + 1j * rng.standard_normal((d_a, d_b))
    return BipartiteState.from_matrix(z / np.linalg.norm(z))


def random_pvm(d: int, m: int, rng) -> np.ndarray:
    """Projective measurement with ``m`` outcomes from a random basis split at random cut points."""
    u = random_unitary(d, rng)
    labels = rng.integers(0, m, size=d)
    out = np.zeros((m, d, d), dtype=np.complex128)
    for a in range(m):
        cols = u[:, labels == a]
        out[a] = cols @ cols.conj().T
    return out


def random_povm(d: int, m: int, rng) -> np.ndarray:
    g = np.stack([random_psd(d, rng) for _ in range(m)])
    r = pinv_sqrt(g.sum(axis=0))
    out = r @ g @ r
    return 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))


def random_family(n_x: int, m: int, d: int, rng, projective: bool = False) -> MeasurementFamily:
    make = random_pvm if projective else random_povm
    elems = np.stack([make(d, m, rng) for _ in range(n_x)])
    return MeasurementFamily(tuple(range(n_x)), tuple(range(m)), elems, "projective" if projective else "general")


def perturb_family(fam: MeasurementFamily, t: float, rng) -> MeasurementFamily:
    """Convex mix ``(1 - t) A + t N`` with a random measurement ``N``."""
    noise = np.stack([random_povm(fam.dim, len(fam.outcomes), rng) for _ in fam.questions])
    return fam.replace((1 - t) * fam.elements + t * noise, kind="general")


def random_distribution(n: int, rng) -> np.ndarray:
    p = rng.random(n) + 0.05
    return p / p.sum()


# -- checks -------------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    instances: int
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: margin={self.margin:.3e} instances={self.instances} time={self.seconds:.2f}s"


def _result(name, margins, start, tol):
    worst = float(min(margins))
    return CheckResult(name, worst >= -tol, worst, len(margins), time.perf_counter() - start)


def _tol(tol):
    return _config.TOL.slack if tol is None else tol


def check_ladder(seed=0, n=100, tol=None) -> CheckResult:
    """``sum_k len_k P_k = rho`` and ``sum_k w_k = 1`` on random densities."""
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    margins = []
    for _ in range(n):
        d = int(rng.integers(2, 17))
        rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        lad = build_ladder(rho)
        rec = np.linalg.norm(lad.reconstruct() - rho)
        margins.append(min(1e-9 - rec, 1e-9 - abs(lad.weights.sum() - 1)))
    return _result("ladder_exactness", margins, start, 0.0)


def check_connes(seed=0, n=100, tol=None) -> CheckResult:
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    margins = []
    for _ in range(n):
        d = int(rng.integers(2, 13))
        rho = random_psd(d, rng, rank=int(rng.integers(1, d + 1)))
        sigma = random_psd(d, rng, rank=int(rng.integers(1, d + 1)))
        scale = rng.random() + 0.1
        lhs, rhs = connes_integral(rho / np.trace(rho).real, scale * sigma / np.trace(sigma).real)
        margins.append(rhs - lhs)
    return _result("connes_inequality", margins, start, _tol(tol))


def consistency_instance(rng):
    """Symmetric state, projective ``A`` and perturbed ``M``; returns ``(gamma, delta, middle)``."""
    d = int(rng.integers(2, 7))
    n_x, m = int(rng.integers(1, 4)), int(rng.integers(2, 4))
    rho = random_density(d, rng)
    s = psd_sqrt(rho)
    a = random_family(n_x, m, d, rng, projective=True)
    mm = perturb_family(a, float(rng.random()), rng)
    nu = random_distribution(n_x, rng)
    pair = lambda x, y: np.einsum("xaij,jk,xakl,li->x", x, s, y, s).real
    delta = 1.0 - float(nu @ pair(a.elements, a.elements))
    gamma = 1.0 - float(nu @ pair(a.elements, mm.elements))
    diff = a.elements - mm.elements
    middle = float(nu @ np.einsum("xaij,xajk,ki->x", diff, diff, rho).real)
    return gamma, delta, middle


def check_consistency(seed=0, n=100, tol=None) -> CheckResult:
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    margins = []
    for _ in range(n):
        gamma, delta, middle = consistency_instance(rng)
        margins.append(min(middle - (gamma - delta) ** 2, 2 * gamma + 2 * np.sqrt(2 * max(delta, 0)) - middle))
    return _result("consistency_bounds", margins, start, _tol(tol))


def nearby_instance(rng):
    """Random strategy and perturbed Alice side; returns ``(gap, delta, gamma)``."""
    d_a, d_b = int(rng.integers(2, 5)), int(rng.integers(2, 5))
    n_x, n_y, m_a, m_b = (int(v) for v in rng.integers(1, 4, size=4))
    m_a, m_b = m_a + 1, m_b + 1
    state = random_state(d_a, d_b, rng)
    alice = random_family(n_x, m_a, d_a, rng, projective=bool(rng.integers(0, 2)))
    bob = random_family(n_y, m_b, d_b, rng)
    hat = perturb_family(alice, 0.5 * float(rng.random()), rng)
    nu = random_distribution(n_x * n_y, rng).reshape(n_x, n_y)
    nu_a = nu.sum(axis=1)
    c = pair_operators(state.matrix, alice.elements, bob.elements)
    c_hat = pair_operators(state.matrix, hat.elements, bob.elements)
    gap = float(np.einsum("xy,xyab->", nu, np.abs(c - c_hat)))
    sym = symmetrize_side(Strategy(state, alice, bob), "A")
    delta = delta_sync(sym, nu_a)
    rho = sym.rho
    diff = alice.elements - hat.elements
    gamma = float(nu_a @ np.einsum("xaij,xajk,ki->x", diff, diff, rho).real)
    return gap, delta, gamma


def check_nearby(seed=0, n=100, tol=None) -> CheckResult:
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    margins = []
    for _ in range(n):
        gap, delta, gamma = nearby_instance(rng)
        margins.append(3 * delta + 4 * np.sqrt(max(gamma, 0)) - gap)
    return _result("nearby_correlation", margins, start, _tol(tol))


def random_strategy(rng, d_max=4, m_max=3, q_max=3) -> Strategy:
    d_a, d_b = (int(v) for v in rng.integers(2, d_max + 1, size=2))
    n_x, n_y = (int(v) for v in rng.integers(1, q_max + 1, size=2))
    m_a, m_b = (int(v) for v in rng.integers(2, m_max + 1, size=2))
    return Strategy(random_state(d_a, d_b, rng), random_family(n_x, m_a, d_a, rng), random_family(n_y, m_b, d_b, rng))


def check_naimark(seed=0, n=50, tol=None) -> CheckResult:
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    margins = []
    for _ in range(n):
        s = random_strategy(rng)
        dil = naimark_dilate(s)
        err = np.abs(induce_correlation(dil).table - induce_correlation(s).table).max()
        proj = max(
            validate(q, "projective").projectivity_defect for fam in (dil.alice, dil.bob) for q in fam.elements
        )
        margins.append(min(1e-9 - err, 1e-9 - proj))
    return _result("naimark_exactness", margins, start, 0.0)


def two_step_instance(rng):
    """Density with two distinct eigenvalues, possibly rank deficient, and per-step PVMs."""
    d = int(rng.integers(2, 7))
    rank = int(rng.integers(2, d + 1))
    r1 = int(rng.integers(1, rank))
    u = random_unitary(d, rng)
    hi, lo = sorted(rng.random(2) + 0.1, reverse=True)
    w = np.zeros(d)
    w[:r1], w[r1:rank] = hi, lo
    w /= w.sum()
    rho = (u * w) @ u.conj().T
    lad = build_ladder(rho)
    n_y, m = int(rng.integers(1, 3)), int(rng.integers(2, 4))
    steps = [MeasurementFamily(tuple(range(n_y)), tuple(range(m)), np.stack([random_pvm(int(r), m, rng) for _ in range(n_y)]), "projective") for r in lad.ranks]
    return rho, lad, steps


def check_lift(seed=0, n=20, tol=None) -> CheckResult:
    from .rounding import DecompositionDiagnostics, PMEDecomposition

    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    margins = []
    for _ in range(n):
        rho, lad, steps = two_step_instance(rng)
        dummy = PMEDecomposition(lad, tuple(steps), steps[0], DecompositionDiagnostics(0, 0, 0, 0, 0))
        lifted = lift_measurements(dummy, steps, rho)
        support = lad.projector(len(lad) - 1)
        completeness = max(np.linalg.norm(q.sum(axis=0) - support) for q in lifted.elements)
        a = random_pvm(rho.shape[0], 2, rng)
        s = psd_sqrt(rho)
        lhs = np.einsum("aij,jk,ybkl,li->yab", a, s, lifted.elements, s).real
        rhs = sum(
            w / r * np.einsum("aij,ybji->yab", lad.isometry(k).conj().T @ a @ lad.isometry(k), steps[k].elements).real
            for k, (w, r) in enumerate(zip(lad.weights, lad.ranks))
        )
        margins.append(min(1e-8 - completeness, 1e-8 - np.abs(lhs - rhs).max()))
    return _result("lift_validity", margins, start, 0.0)


def check_game_values(seed=0, n=1, tol=None) -> CheckResult:
    start = time.perf_counter()
    g, s = builtin_game("chsh")
    chsh_err = abs(game_value(g, s) - (2 + np.sqrt(2)) / 4)
    g2, s2 = builtin_game("magic_square")
    ms_err = abs(game_value(g2, s2) - 1.0)
    route_err = max(abs(game_value(g, s) - game_value_direct(g, s)), abs(game_value(g2, s2) - game_value_direct(g2, s2)))
    return _result("game_values", [1e-6 - chsh_err, 1e-9 - ms_err, 1e-10 - route_err], start, 0.0)


def check_exact_recovery(seed=0, n=1, tol=None) -> CheckResult:
    start = time.perf_counter()
    g, s = builtin_game("magic_square")
    sym = symmetrize_side(s, "A")
    nu = g.marginal("A")
    dec = pme_decompose(sym, nu)
    mix = mixture_correlation(dec, sym.to_strategy(), np.outer(nu, nu))
    margins = [1e-12 - delta_sync(sym, nu), 1e-8 - dec.diagnostics.residual, 1e-6 - mix.l1_gap]
    return _result("exact_recovery", margins, start, 0.0)


def check_commutation(seed=0, n=None, tol=None) -> CheckResult:
    """Commutation bound ``defect <= 2 sqrt(2 delta')`` on every sweep-family strategy."""
    start = time.perf_counter()
    margins = []
    for name in ("chsh", "magic_square"):
        for kind in NOISE_KINDS:
            for level in SWEEP_LEVELS:
                g, s = generate(name, NoiseModel(kind, level, seed))
                row = sweep_row(g, s, level)
                margins.append(2 * np.sqrt(2 * row.delta_prime) - row.commutation_defect)
    return _result("commutation_bound", margins, start, _tol(tol))


CHECKS = {
    "ladder_exactness": check_ladder,
    "connes_inequality": check_connes,
    "consistency_bounds": check_consistency,
    "nearby_correlation": check_nearby,
    "exact_recovery": check_exact_recovery,
    "commutation_bound": check_commutation,
    "naimark_exactness": check_naimark,
    "game_values": check_game_values,
    "lift_validity": check_lift,
}


def run_all(seed=0, tol=None, names=None):
    return [CHECKS[k](seed=seed, tol=tol) for k in (names or CHECKS)]
