"""Noisy strategy generation, noise sweeps and power-law fits."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import InsufficientData, NonPositive, UnknownName
from .games import builtin_game, game_value
from .rounding import mixture_correlation, round_alice
from .strategy import BipartiteState, MeasurementFamily, Strategy, canonical_purification

RNG_ALGORITHM = "numpy.PCG64"
NOISE_KINDS = ("depolarize_state", "smooth_povm", "rotate_measurements")
FIT_FLOOR = 1e-12  # smaller values are round-off and are left out of fits


@dataclass(frozen=True)
class NoiseModel:
    kind: str
    level: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise UnknownName(f"unknown noise model {self.kind!r}; choose from {list(NOISE_KINDS)}")
        if not 0.0 <= float(self.level) <= 1.0:
            raise ValueError(f"noise level must lie in [0, 1], got {self.level}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def _depolarize(s: Strategy, p: float) -> Strategy:
    d_a, d_b = s.state.d_a, s.state.d_b
    psi = s.state.amplitudes
    rho = (1 - p) * np.outer(psi, psi.conj()) + p * np.eye(d_a * d_b) / (d_a * d_b)
    pure, _ = canonical_purification(rho)
    # purification lives on (A B) (x) (A' B'); regroup as (A A') (x) (B B')
    t = pure.matrix.reshape(d_a, d_b, d_a, d_b).transpose(0, 2, 1, 3)
    state = BipartiteState.from_matrix(t.reshape(d_a * d_a, d_b * d_b))

    def extend(fam: MeasurementFamily, d: int) -> MeasurementFamily:
        eye = np.eye(d)
        elems = np.einsum("xaij,kl->xaikjl", fam.elements, eye).reshape(*fam.elements.shape[:2], d * d, d * d)
        return fam.replace(elems, check=False)

    return Strategy(state, extend(s.alice, d_a), extend(s.bob, d_b))


def _smooth(fam: MeasurementFamily, p: float) -> MeasurementFamily:
    m = len(fam.outcomes)
    eye = np.eye(fam.dim) / m
    kind = "projective" if p == 0 else "general"
    return fam.replace((1 - p) * fam.elements + p * eye, kind=kind, check=False)


def random_unit_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian Hermitian matrix scaled to operator norm 1."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (g + g.conj().T) / 2
    return h / np.abs(np.linalg.eigvalsh(h)).max()


def _rotate(s: Strategy, theta: float, rng: np.random.Generator) -> Strategy:
    g = random_unit_hermitian(s.alice.dim, rng)
    w, v = np.linalg.eigh(g)
    u = (v * np.exp(1j * theta * w)) @ v.conj().T
    rotated = u @ s.alice.elements @ u.conj().T
    return Strategy(s.state, s.alice.replace(rotated, check=False), s.bob)


def apply_noise(s: Strategy, noise: NoiseModel) -> Strategy:
    """Apply a noise model to a strategy; level 0 returns the input unchanged."""
    p = float(noise.level)
    if p == 0:
        return s
    if noise.kind == "depolarize_state":
        return _depolarize(s, p)
    if noise.kind == "smooth_povm":
        return Strategy(s.state, _smooth(s.alice, p), _smooth(s.bob, p))
    return _rotate(s, p, np.random.default_rng(int(noise.seed)))


def generate(name: str, noise: NoiseModel = None):
    """Return ``(game, strategy)`` for a built-in game with noise applied to its reference strategy."""
    game, ref = builtin_game(name)
    if noise is None:
        return game, ref
    return game, apply_noise(ref, noise)


# -- sweeps --------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    game: str
    noise: str
    levels: tuple
    seed: int = 0
    report: str = None
    workers: int = None

    def __post_init__(self):
        levels = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ValueError("level grid must be nonempty")
        if any(b >= a for a, b in zip(levels, levels[1:])):
            raise ValueError("level grid must be strictly decreasing")
        NoiseModel(self.noise, levels[0], self.seed)


@dataclass(frozen=True)
class SweepRow:
    level: float
    epsilon: float
    delta_sync: float
    delta_prime: float
    commutation_defect: float
    residual: float
    l1_gap: float
    mixture_value: float

    @classmethod
    def header(cls) -> list:
        return [f.name for f in fields(cls)]

    def values(self) -> list:
        return list(asdict(self).values())


@dataclass(frozen=True)
class Fit:
    curve: str
    c: float
    C: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    fits: tuple
    config: SweepConfig
    rng: str = RNG_ALGORITHM


def fit_exponent(xs, ys):
    """Least-squares fit of ``y = C x^c`` in log space; returns ``(c, C)``."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise InsufficientData("xs and ys must be 1-d arrays of equal length")
    if xs.size < 2:
        raise InsufficientData("need at least two points to fit")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise NonPositive("fit needs strictly positive data")
    lx = np.log(xs)
    if np.ptp(lx) == 0:
        raise InsufficientData("all x values coincide")
    c, log_c = np.polyfit(lx, np.log(ys), 1)
    return float(c), float(np.exp(log_c))


def _clip0(v: float) -> float:
    return max(0.0, float(v))


def sweep_row(game, strategy: Strategy, level: float, workers: int = None) -> SweepRow:
    """Round one strategy and collect the sweep observables."""
    out = round_alice(game, strategy, workers)
    diag = out.decomposition.diagnostics
    nu_a = game.marginal("A")
    mix = mixture_correlation(out.decomposition, out.symmetric_alice.to_strategy(), np.outer(nu_a, nu_a))
    return SweepRow(
        level=float(level),
        epsilon=_clip0(1.0 - game_value(game, strategy)),
        delta_sync=_clip0(diag.delta_sync_in),
        delta_prime=_clip0(diag.delta_prime),
        commutation_defect=_clip0(diag.commutation_defect),
        residual=_clip0(diag.residual),
        l1_gap=_clip0(mix.l1_gap),
        mixture_value=_clip0(out.mixture_value),
    )


def _fit_curve(name, xs, ys):
    pts = [(x, y) for x, y in zip(xs, ys) if x > FIT_FLOOR and y > FIT_FLOOR]
    if len(pts) < 2 or len({x for x, _ in pts}) < 2:
        return None
    c, big_c = fit_exponent(*zip(*pts))
    return Fit(name, c, big_c)


def sweep(config: SweepConfig) -> SweepResult:
    """One row per level, in the configured order, plus power-law fits."""

    def run(level):
        game, s = generate(config.game, NoiseModel(config.noise, level, config.seed))
        return sweep_row(game, s, level)

    if config.workers and config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = tuple(pool.map(run, config.levels))
    else:
        rows = tuple(run(level) for level in config.levels)
    fits = [
        _fit_curve("residual_vs_delta_sync", [r.delta_sync for r in rows], [r.residual for r in rows]),
        _fit_curve("value_loss_vs_epsilon", [r.epsilon for r in rows], [1.0 - r.mixture_value for r in rows]),
    ]
    return SweepResult(rows, tuple(f for f in fits if f is not None), config)
