"""Random group codebooks, pretty-good-measurement decoding and Monte-Carlo achievability."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .bounds import default_delta_grid, sandwich_bounds
from .entropy import collision_trace
from .errors import SizeGuardError
from .qcore import as_density_matrix, hermitian_eig, matrix_power_on_support
from .twirl import MAX_GROUP_ORDER, FiniteUnitaryGroup, TwirlChannel

MAX_DIM = 64
MAX_MESSAGES = 256
STRATEGIES = ("random", "distinct")


@dataclass(frozen=True)
class Codebook:
    """Message m is encoded with group element ``assignment[m]`` (0-based)."""

    assignment: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(g) for g in self.assignment))
        if not self.assignment:
            raise ValueError("a codebook needs at least one message")

    @property
    def M(self) -> int:
        return len(self.assignment)

    def check(self, order: int) -> None:
        bad = [g for g in self.assignment if not 0 <= g < order]
        if bad:
            raise IndexError(f"group indices {bad} outside 0..{order - 1}")


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    # counter-based stream per (seed, trial): independent of thread scheduling
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def random_codebook(order: int, M: int, rng: np.random.Generator, strategy: str = "random") -> Codebook:
    if strategy == "random":
        return Codebook(tuple(rng.integers(0, order, size=M)))
    if strategy == "distinct":
        if M > order:
            raise ValueError(f"cannot draw {M} distinct elements from a group of order {order}")
        return Codebook(tuple(rng.permutation(order)[:M]))
    raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")


def _guard(rho: np.ndarray, group: FiniteUnitaryGroup, M: int) -> None:
    if rho.shape[0] > MAX_DIM:
        raise SizeGuardError(f"state dimension {rho.shape[0]} exceeds {MAX_DIM}")
    if M > MAX_MESSAGES:
        raise SizeGuardError(f"M={M} exceeds {MAX_MESSAGES}")
    if len(group) > MAX_GROUP_ORDER:
        raise SizeGuardError(f"group order {len(group)} exceeds {MAX_GROUP_ORDER}")
    if group.dim != rho.shape[0]:
        raise ValueError("group and state dimensions differ")


def encode(rho, group: FiniteUnitaryGroup, cb: Codebook) -> np.ndarray:
    """The encoded states U_g rho U_g^† as an (M, d, d) array."""
    rho = np.asarray(rho, dtype=complex)
    cb.check(len(group))
    us = group.elements[list(cb.assignment)]
    return np.einsum("mij,jk,mlk->mil", us, rho, us.conj(), optimize=True)


@dataclass
class PgmDecoder:
    """POVM {S sigma_m S} plus an abstain element 1 − Pi on the complement of the support."""

    elements: np.ndarray
    discard: np.ndarray
    support_dim: int

    @property
    def povm(self) -> list[np.ndarray]:
        return list(self.elements) + [self.discard]

    def completeness_residual(self) -> float:
        total = self.elements.sum(axis=0) + self.discard
        return float(np.max(np.abs(total - np.eye(total.shape[0]))))


def build_pgm(states) -> PgmDecoder:
    states = np.asarray(states, dtype=complex)
    total = states.sum(axis=0)
    s = matrix_power_on_support(total, -0.5)
    elements = np.einsum("ij,mjk,kl->mil", s, states, s, optimize=True)
    ev, u = hermitian_eig(total)
    keep = ev > 1e-12 * max(float(ev.max()), 1e-300)
    v = u[:, keep]
    discard = np.eye(total.shape[0]) - v @ v.conj().T
    return PgmDecoder(elements, discard, int(keep.sum()))


def success_probability_direct(states, decoder: PgmDecoder) -> float:
    """(1/M) sum_m tr(sigma_m E_m)."""
    states = np.asarray(states)
    val = np.einsum("mij,mji->", states, decoder.elements)
    return float(np.real(val)) / len(states)


def success_probability_via_collision(rho, group: FiniteUnitaryGroup, cb: Codebook) -> float:
    """PGM success from the collision divergence: (1/M^2) sum_m tr[(tau^{-1/4} sigma_m tau^{-1/4})^2].

    tau = sum_m sigma_m / M is the decoder-side marginal; this equals
    (1/M) 2^{D2(tau_MQ || tau_M ⊗ tau_Q)} with the block-diagonal
    classical-quantum state tau_MQ = (1/M) sum_m |m><m| ⊗ sigma_m.
    """
    states = encode(rho, group, cb)
    m = len(states)
    tau = states.sum(axis=0) / m
    s = matrix_power_on_support(tau, -0.25)
    total = 0.0
    for sig in states:
        x = s @ sig @ s
        total += float(np.real(np.sum(x * x.T)))
    return total / (m * m)


def collision_success_dense(rho, group: FiniteUnitaryGroup, cb: Codebook) -> float:
    """Same quantity built from the full classical-quantum state (small cases only)."""
    states = encode(rho, group, cb)
    m, d = len(states), states.shape[1]
    tau_mq = np.zeros((m * d, m * d), dtype=complex)
    for k, sig in enumerate(states):
        tau_mq[k * d:(k + 1) * d, k * d:(k + 1) * d] = sig / m
    ref = np.kron(np.eye(m) / m, states.sum(axis=0) / m)
    return collision_trace(tau_mq, ref) / m


def codebook_success(rho, group: FiniteUnitaryGroup, cb: Codebook) -> float:
    states = encode(rho, group, cb)
    return success_probability_direct(states, build_pgm(states))


@dataclass
class SimulationResult:
    M: int
    trials: int
    seed: int
    strategy: str
    mean_success: float
    stderr: float
    best_success: float
    per_codebook: list[float] = field(repr=False)
    eps_target: float | None = None

    @property
    def mean_error(self) -> float:
        return 1.0 - self.mean_success

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def csv_row(self) -> list:
        return [self.M, repr(self.mean_success), repr(self.stderr)]


def results_to_csv(results: Sequence[SimulationResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["M", "mean_success", "stderr"])
    for r in results:
        w.writerow(r.csv_row())
    return buf.getvalue()


def monte_carlo_achievability(
    rho,
    group: FiniteUnitaryGroup,
    M: int,
    trials: int,
    seed: int = 0,
    strategy: str = "random",
    threads: int = 1,
    eps_target: float | None = None,
) -> SimulationResult:
    """Mean PGM success over ``trials`` codebooks; trial k draws from the stream (seed, k)."""
    rho = as_density_matrix(rho)
    _guard(rho, group, M)
    if trials < 1:
        raise ValueError("trials must be positive")
    order = len(group)

    def one(k: int) -> float:
        cb = random_codebook(order, M, _trial_rng(seed, k), strategy)
        return codebook_success(rho, group, cb)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, range(trials)))
    else:
        values = [one(k) for k in range(trials)]
    arr = np.array(values)
    stderr = float(arr.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return SimulationResult(M, trials, seed, strategy, float(arr.mean()), stderr, float(arr.max()),
                            values, eps_target)


@dataclass
class AchievabilityReport:
    log2_M: float
    M: int
    simulation: SimulationResult | None
    sandwich: dict | None = None

    def to_dict(self) -> dict:
        return {
            "log2_M": self.log2_M,
            "M": self.M,
            "simulation": None if self.simulation is None else asdict(self.simulation),
            "sandwich": self.sandwich,
        }


def find_achievable_log_m(
    rho,
    group: FiniteUnitaryGroup,
    eps: float,
    trials: int = 200,
    seed: int = 0,
    strategy: str = "random",
    twirl: TwirlChannel | None = None,
    threads: int = 1,
    max_messages: int = MAX_MESSAGES,
) -> AchievabilityReport:
    """Largest M whose mean PGM error over sampled codebooks is at most eps.

    M doubles until the target fails (or a cap is hit), then bisects between
    the last success and the first failure.  M = 1 always succeeds.  With
    ``twirl`` given, the random-coding sandwich is attached for comparison.
    """
    rho = as_density_matrix(rho)
    cap = min(max_messages, MAX_MESSAGES)
    if strategy == "distinct":
        cap = min(cap, len(group))
    cache: dict[int, SimulationResult] = {}

    def ok(m: int) -> bool:
        if m not in cache:
            cache[m] = monte_carlo_achievability(rho, group, m, trials, seed, strategy, threads, eps)
        return cache[m].mean_error <= eps

    good, bad = 1, None
    m = 2
    while m <= cap:
        if ok(m):
            good = m
            m *= 2
        else:
            bad = m
            break
    if bad is None and good < cap:
        if ok(cap):
            good = cap
        else:
            bad = cap
    if bad is not None:
        while bad - good > 1:
            mid = (good + bad) // 2
            if ok(mid):
                good = mid
            else:
                bad = mid
    sandwich = None
    if twirl is not None and 0 < eps < 1:
        sandwich = sandwich_bounds(rho, twirl, eps, default_delta_grid(eps)).to_dict()
    return AchievabilityReport(math.log2(good), good, cache.get(good), sandwich)


def check_privacy(rho, group: FiniteUnitaryGroup, cb: Codebook, twirl) -> float:
    """max_m ‖G(sigma_m) − G(rho)‖_max: zero when every codeword looks identical after the twirl."""
    rho = np.asarray(rho, dtype=complex)
    ref = twirl(rho)
    return max(float(np.max(np.abs(twirl(s) - ref))) for s in encode(rho, group, cb))
