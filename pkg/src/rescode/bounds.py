"""One-shot and asymptotic bounds on log2 of the number of encodable messages."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .entropy import (
    EntropicValue,
    hypothesis_testing_relative_entropy,
    info_spectrum_relative_entropy,
    inverse_normal_cdf,
    relative_entropy,
    relative_entropy_variance,
    shannon_entropy,
    von_neumann_entropy,
)
from .errors import InvalidChannelError
from .qcore import (
    QuantumChannel,
    as_density_matrix,
    as_hermitian,
    as_pure_state,
    partial_trace,
)
from .twirl import TwirlChannel, dephasing_channel

IDEMPOTENCY_TOL = 1e-8
ZERO_VARIANCE = 1e-12
REDUCED_DIM_LIMIT = 64
DENSE_DIM_LIMIT = 64


@dataclass
class BoundReport:
    log2_upper: float
    sandwich: list[tuple[float, float, float]]
    epsilon: float
    state_dim: int
    rdm_tag: str

    @property
    def best_lower(self) -> float:
        return max(row[1] for row in self.sandwich) if self.sandwich else -math.inf

    @property
    def best_upper(self) -> float:
        return min(row[2] for row in self.sandwich) if self.sandwich else math.inf

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "state_dim": self.state_dim,
            "rdm_tag": self.rdm_tag,
            "log2_upper": self.log2_upper,
            "sandwich": [{"delta": d, "lower": lo, "upper": up} for d, lo, up in self.sandwich],
            "best_lower": self.best_lower,
            "best_upper": self.best_upper,
        }


@dataclass
class RateCurve:
    rows: list[tuple[int, float, float, float, float]] = field(default_factory=list)

    HEADER = ("N", "first_order", "second_order", "lower", "upper")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for row in self.rows:
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"rows": [dict(zip(self.HEADER, r)) for r in self.rows]}


# ---------------------------------------------------------------------------
# one-shot bounds
# ---------------------------------------------------------------------------


def _check_idempotent(rdm: QuantumChannel) -> None:
    probes = 0 if rdm.dim_in <= 16 else 3
    r = rdm.idempotency_residual(probes=probes)
    if r > IDEMPOTENCY_TOL:
        raise InvalidChannelError(f"resource destroying map is not idempotent (residual {r:.3g})")


def upper_bound_log_messages(rho, rdm: QuantumChannel, eps: float) -> EntropicValue:
    """D_H^eps(rho || D(rho)): no code with average error <= eps has more messages."""
    rho = as_density_matrix(rho)
    _check_idempotent(rdm)
    return hypothesis_testing_relative_entropy(rho, rdm(rho), eps)


def _check_delta(eps: float, delta: float) -> None:
    if not 0 < delta < min(eps, 1 - eps):
        raise ValueError(f"delta={delta} must lie in (0, min(eps, 1-eps)) for eps={eps}")


def sandwich_pair(rho, sigma, eps: float, delta: float) -> tuple[float, float]:
    """(D_s^{eps-delta} + log delta, D_s^{eps+delta} + log 1/delta) for an explicit pair."""
    _check_delta(eps, delta)
    lower = info_spectrum_relative_entropy(rho, sigma, eps - delta) + math.log2(delta)
    upper = info_spectrum_relative_entropy(rho, sigma, eps + delta) - math.log2(delta)
    return float(lower), float(upper)


def sandwich_bounds(rho, twirl: TwirlChannel, eps: float, delta_grid: Sequence[float]) -> BoundReport:
    """Random-coding lower bound and converse for a twirl, on every delta of the grid."""
    if not isinstance(twirl, TwirlChannel):
        raise TypeError("sandwich bounds need a group twirl (TwirlChannel)")
    rho = as_density_matrix(rho)
    for d in delta_grid:
        _check_delta(eps, d)
    sigma = twirl(rho)
    rows = [(float(d), *sandwich_pair(rho, sigma, eps, d)) for d in delta_grid]
    upper = float(hypothesis_testing_relative_entropy(rho, sigma, eps))
    return BoundReport(upper, rows, eps, rho.shape[0], twirl.tag)


def default_delta_grid(eps: float, points: int = 9) -> list[float]:
    top = min(eps, 1 - eps)
    return [top * k / (points + 1) for k in range(1, points + 1)]


# ---------------------------------------------------------------------------
# i.i.d. pure states: exact reduction to type classes
# ---------------------------------------------------------------------------


def _types(n: int, d: int):
    for cut in itertools.combinations(range(n + d - 1), d - 1):
        bounds = (-1,) + cut + (n + d - 1,)
        yield tuple(bounds[i + 1] - bounds[i] - 1 for i in range(d))


def tensor_power_reduction(psi, sigma1, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Reduce (|psi><psi|^{⊗n}, sigma1^{⊗n}) to the type-class subspaces.

    With sigma1 = sum_j s_j |e_j><e_j| and c_j = <e_j|psi>, both operators act
    on span{normalized symmetric type vectors |t>} as
    rho_W = |w><w|, w_t = sqrt(multinomial(t) prod |c_j|^{2 t_j}) and
    sigma_W = diag(prod s_j^{t_j}); on the orthogonal complement rho vanishes
    and sigma^{⊗n} is block-scalar, so D, V, D_s and D_H are unchanged.
    Returns (rho_W, sigma_W) of dimension C(n+d-1, d-1).
    """
    psi = as_pure_state(psi)
    s, e = np.linalg.eigh(as_hermitian(sigma1))
    s = np.clip(s, 0.0, None)
    p = np.abs(e.conj().T @ psi) ** 2
    d = psi.shape[0]
    log_fact = [math.lgamma(k + 1) for k in range(n + 1)]
    w, diag = [], []
    for t in _types(n, d):
        lw = log_fact[n] - sum(log_fact[k] for k in t)
        pw = 1.0
        sw = 1.0
        for j, k in enumerate(t):
            pw *= p[j] ** k
            sw *= s[j] ** k
        w.append(math.sqrt(math.exp(lw) * pw))
        diag.append(sw)
    w = np.array(w)
    return np.outer(w, w).astype(complex), np.diag(diag).astype(complex)


# ---------------------------------------------------------------------------
# asymptotics
# ---------------------------------------------------------------------------


def _rate(d: float, v: float, eps: float, n: int) -> tuple[float, float]:
    if v <= ZERO_VARIANCE:
        return d, d
    return d, d + inverse_normal_cdf(eps) * math.sqrt(v / n)


def asymptotic_rate(rho, twirl: QuantumChannel, eps: float, n: int) -> tuple[float, float]:
    """(D, D + Phi^{-1}(eps) sqrt(V/N)) for the pair (rho, twirl(rho)), in bits per copy."""
    rho = as_density_matrix(rho)
    sigma = twirl(rho)
    return _rate(float(relative_entropy(rho, sigma)), float(relative_entropy_variance(rho, sigma)), eps, n)


def _is_pure(rho: np.ndarray) -> bool:
    return abs(float(np.real(np.trace(rho @ rho))) - 1.0) < 1e-10


def iid_pair(rho, sigma1, n: int) -> tuple[np.ndarray, np.ndarray] | None:
    """(rho^{⊗n}, sigma1^{⊗n}) in the smallest exact representation available, or None."""
    rho = as_density_matrix(rho)
    d = rho.shape[0]
    if _is_pure(rho) and math.comb(n + d - 1, d - 1) <= REDUCED_DIM_LIMIT:
        ev, u = np.linalg.eigh(rho)
        return tensor_power_reduction(u[:, -1], sigma1, n)
    if d**n <= DENSE_DIM_LIMIT:
        r, s = rho, sigma1
        for _ in range(n - 1):
            r, s = np.kron(r, rho), np.kron(s, sigma1)
        return r, s
    return None


def rate_curve(rho, twirl: QuantumChannel, eps: float, ns: Sequence[int], delta: float | None = None) -> RateCurve:
    """Second-order expansion and the per-copy sandwich for rho^{⊗N} against twirl(rho)^{⊗N}.

    The sandwich columns are NaN when neither the type reduction nor a dense
    tensor power fits the size limits.
    """
    rho = as_density_matrix(rho)
    sigma1 = twirl(rho)
    d = float(relative_entropy(rho, sigma1))
    v = float(relative_entropy_variance(rho, sigma1))
    if delta is None:
        delta = min(eps, 1 - eps) / 5
    curve = RateCurve()
    for n in ns:
        first, second = _rate(d, v, eps, n)
        lower = upper = math.nan
        pair = iid_pair(rho, sigma1, n)
        if pair is not None:
            lower, upper = (x / n for x in sandwich_pair(*pair, eps, delta))
        curve.rows.append((int(n), first, second, lower, upper))
    return curve


def sandwich_midpoint_curve(psi, sigma1, eps: float, delta: float, ns: Sequence[int]) -> np.ndarray:
    """Per-copy (D_s^{eps-delta} + D_s^{eps+delta}) / 2N for psi^{⊗N}; the log delta terms cancel."""
    out = []
    for n in ns:
        r, s = tensor_power_reduction(psi, sigma1, n)
        lo, up = sandwich_pair(r, s, eps, delta)
        out.append((lo + up) / (2 * n))
    return np.array(out)


# ---------------------------------------------------------------------------
# specializations
# ---------------------------------------------------------------------------


def splitting_check(rho, twirl: TwirlChannel) -> float:
    """|R_U(rho) − R_G(rho) − R_U(G rho)| with R_G(rho) evaluated as D(rho||G rho).

    R_U(x) = log d − S(x) is the rate under the full unitary group.
    """
    rho = as_density_matrix(rho)
    g = twirl(rho)
    logd = math.log2(rho.shape[0])
    r_u = logd - von_neumann_entropy(rho)
    r_g = relative_entropy(rho, g)
    r_u_g = logd - von_neumann_entropy(g)
    return float(abs(r_u - r_g - r_u_g))


def conditional_entropy(rho_ab, dims: tuple[int, int]) -> float:
    """S(A|B) = S(AB) − S(B) (equal to −D(rho_AB || 1_A ⊗ rho_B))."""
    rho_ab = as_density_matrix(rho_ab)
    return float(von_neumann_entropy(rho_ab) - von_neumann_entropy(partial_trace(rho_ab, dims, [1])))


def conditional_entropy_variance(rho_ab, dims: tuple[int, int]) -> float:
    """V(rho_AB || 1_A ⊗ rho_B)."""
    rho_ab = as_density_matrix(rho_ab)
    rho_b = partial_trace(rho_ab, dims, [1])
    return float(relative_entropy_variance(rho_ab, np.kron(np.eye(dims[0]), rho_b)))


def local_rate(rho_ab, dims: tuple[int, int]) -> float:
    """log d_A − S(A|B): the rate under local unitaries on A."""
    return math.log2(dims[0]) - conditional_entropy(rho_ab, dims)


def splitting_super_check(rho_ab, dims: tuple[int, int]) -> float:
    """|R_U(rho_AB) − R_loc(rho_AB) − R_U(rho_B)|."""
    rho_ab = as_density_matrix(rho_ab)
    rho_b = partial_trace(rho_ab, dims, [1])
    r_u_ab = math.log2(dims[0] * dims[1]) - von_neumann_entropy(rho_ab)
    r_u_b = math.log2(dims[1]) - von_neumann_entropy(rho_b)
    r_loc = relative_entropy(rho_ab, np.kron(np.eye(dims[0]) / dims[0], rho_b))
    return float(abs(r_u_ab - r_loc - r_u_b))


def coherence_rate(rho, eps: float, n: int) -> tuple[float, float]:
    rho = as_density_matrix(rho)
    return asymptotic_rate(rho, dephasing_channel(rho.shape[0]), eps, n)


def gibbs_state(h, beta: float) -> np.ndarray:
    """exp(−beta H)/Z; beta = inf gives the normalized ground-space projector."""
    h = as_hermitian(h)
    e, u = np.linalg.eigh(h)
    shifted = e - e[0]
    if math.isinf(beta):
        scale = max(1.0, float(np.max(np.abs(e))))
        weights = (shifted <= 1e-9 * scale).astype(float)
    else:
        weights = np.exp(-beta * shifted)
    weights /= weights.sum()
    return (u * weights) @ u.conj().T


def thermo_bound(rho, h, beta: float, eps: float, n: int) -> float:
    """N D(rho||gamma) + sqrt(N V(rho||gamma)) Phi^{-1}(eps) in bits."""
    rho = as_density_matrix(rho)
    gamma = gibbs_state(h, beta)
    if np.max(np.abs(rho - gamma)) <= 1e-12:
        return 0.0
    d = float(relative_entropy(rho, gamma))
    v = float(relative_entropy_variance(rho, gamma))
    if v <= ZERO_VARIANCE:
        return n * d
    return n * d + math.sqrt(n * v) * inverse_normal_cdf(eps)


def energy_distribution(psi, h, rel_tol: float = 1e-9) -> np.ndarray:
    """Weights of psi on the distinct eigenvalues of H (degenerate levels merged)."""
    psi = as_pure_state(psi)
    e, u = np.linalg.eigh(as_hermitian(h))
    amp = np.abs(u.conj().T @ psi) ** 2
    scale = max(1.0, float(np.max(np.abs(e))))
    probs, current = [], None
    for energy, a in zip(e, amp):
        if current is None or energy - current > rel_tol * scale:
            probs.append(0.0)
            current = energy
        probs[-1] += a
    return np.array(probs)


def clock_bound(psi, h, n: int) -> float:
    """N h(p): log2 of the number of distinguishable time labels."""
    return n * float(shannon_entropy(energy_distribution(psi, h)))
