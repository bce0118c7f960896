"""Entropic quantities in bits.

All functions accept plain complex arrays.  Divergences that are infinite
because ``supp(rho)`` is not contained in ``supp(sigma)`` are returned as an
:class:`EntropicValue` whose ``infinite`` flag is set; quantities that are
undefined in that situation raise :class:`~rescode.errors.SupportError`.
"""

from __future__ import annotations

import math
import os
from statistics import NormalDist

import numpy as np

from .errors import BracketError, MonotonicityError, SupportError
from .qcore import (
    _square,
    as_density_matrix,
    hermitian_eig,
    matrix_log2,
    matrix_power_on_support,
    support_mask,
)

SUPPORT_TOL = 1e-9
DS_RESOLUTION = 1e-6

# When set, every D_s evaluation scans K on a grid to confirm that
# K -> tr(rho Pi) is nondecreasing before bisecting.
CHECK_MONOTONE = os.environ.get("RESCODE_CHECK_MONOTONE", "") not in ("", "0")


class EntropicValue(float):
    """A float tagged with the quantity it represents.

    ``EntropicValue(math.inf, "D").infinite`` is True; arithmetic on tagged
    values returns plain floats.
    """

    def __new__(cls, value, quantity: str, param: float | None = None):
        obj = super().__new__(cls, value)
        obj.quantity = quantity
        obj.param = param
        return obj

    @property
    def infinite(self) -> bool:
        return math.isinf(self)

    def __repr__(self) -> str:
        p = "" if self.param is None else f", param={self.param}"
        return f"EntropicValue({float(self)!r}, {self.quantity!r}{p})"


def _state(rho) -> np.ndarray:
    return as_density_matrix(rho, tol=1e-8)


def kernel_weight(rho: np.ndarray, sigma: np.ndarray) -> float:
    """tr(rho P) with P the projector onto the kernel of sigma."""
    ev, u = hermitian_eig(sigma)
    ker = u[:, ~support_mask(ev)]
    if ker.shape[1] == 0:
        return 0.0
    return float(np.real(np.einsum("ij,ik,kj->", ker.conj(), rho, ker)))


def support_contained(rho, sigma, tol: float = SUPPORT_TOL) -> bool:
    return kernel_weight(np.asarray(rho, dtype=complex), np.asarray(sigma, dtype=complex)) <= tol


def _require_support(rho, sigma, name: str) -> None:
    if not support_contained(rho, sigma):
        raise SupportError(f"{name}: supp(rho) is not contained in supp(sigma)")


# ---------------------------------------------------------------------------
# Shannon / von Neumann
# ---------------------------------------------------------------------------


def shannon_entropy(p) -> EntropicValue:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size == 0 or np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-10:
        raise ValueError("not a probability distribution")
    q = p[p > 0]
    h = float(-np.sum(q * np.log2(q)))
    return EntropicValue(max(h, 0.0), "h")


def von_neumann_entropy(rho) -> EntropicValue:
    rho = _state(rho)
    ev = np.linalg.eigvalsh(rho)
    ev = ev[support_mask(ev)]
    s = float(-np.sum(ev * np.log2(ev)))
    return EntropicValue(min(max(s, 0.0), math.log2(rho.shape[0])), "S")


def entropy_variance(rho) -> EntropicValue:
    """V(rho) = tr rho (S + log rho)^2."""
    rho = _state(rho)
    ev = np.linalg.eigvalsh(rho)
    ev = ev[support_mask(ev)]
    lg = np.log2(ev)
    s = -np.sum(ev * lg)
    return EntropicValue(float(np.sum(ev * (lg + s) ** 2)), "V")


# ---------------------------------------------------------------------------
# relative entropy and variance
# ---------------------------------------------------------------------------


def _log_ratio(rho, sigma) -> np.ndarray:
    return matrix_log2(rho) - matrix_log2(sigma)


def relative_entropy(rho, sigma) -> EntropicValue:
    """D(rho||sigma) = tr rho (log rho − log sigma); +inf when supports clash."""
    rho, sigma = _state(rho), _square(sigma)
    if rho.shape != sigma.shape:
        raise ValueError("dimension mismatch")
    if not support_contained(rho, sigma):
        return EntropicValue(math.inf, "D")
    d = float(np.real(np.trace(rho @ _log_ratio(rho, sigma))))
    return EntropicValue(d, "D")


def relative_entropy_variance(rho, sigma) -> EntropicValue:
    """V(rho||sigma) = tr rho (log rho − log sigma)^2 − D^2."""
    rho, sigma = _state(rho), _square(sigma)
    _require_support(rho, sigma, "relative entropy variance")
    lr = _log_ratio(rho, sigma)
    d = np.real(np.trace(rho @ lr))
    v = float(np.real(np.trace(rho @ lr @ lr)) - d * d)
    return EntropicValue(v, "V")


def matrix_covariance(rho, a, b) -> float:
    """Re tr(rho A B) − tr(rho A) tr(rho B)."""
    rho, a, b = _square(rho), _square(a), _square(b)
    if not rho.shape == a.shape == b.shape:
        raise ValueError("dimension mismatch")
    return float(np.real(np.trace(rho @ a @ b)) - np.real(np.trace(rho @ a)) * np.real(np.trace(rho @ b)))


# ---------------------------------------------------------------------------
# collision relative entropy
# ---------------------------------------------------------------------------


def collision_trace(rho, sigma) -> float:
    """tr[(sigma^{-1/4} rho sigma^{-1/4})^2] for PSD (not necessarily normalized) inputs."""
    s = matrix_power_on_support(sigma, -0.25)
    x = s @ rho @ s
    return float(np.real(np.sum(x * x.T)))


def collision_relative_entropy(rho, sigma) -> EntropicValue:
    """D2(rho||sigma) = log tr[(sigma^{-1/4} rho sigma^{-1/4})^2], inverse powers on supp(sigma)."""
    rho, sigma = _state(rho), _square(sigma)
    _require_support(rho, sigma, "collision relative entropy")
    return EntropicValue(math.log2(collision_trace(rho, sigma)), "D2")


# ---------------------------------------------------------------------------
# information spectrum relative entropy
# ---------------------------------------------------------------------------


def spectrum_weight(rho: np.ndarray, sigma: np.ndarray, k: float) -> float:
    """tr(rho Pi) with Pi the projector onto eigenspaces of 2^K sigma − rho with eigenvalue >= 0."""
    a = (2.0**k) * sigma - rho
    ev, u = np.linalg.eigh((a + a.conj().T) / 2)
    scale = max(float(np.max(np.abs(ev))), 1e-300)
    v = u[:, ev >= -1e-14 * scale]
    return float(np.real(np.einsum("ij,ik,kj->", v.conj(), rho, v)))


def _check_monotone(rho, sigma, lo, hi, points=200):
    ks = np.linspace(lo, hi, points)
    vals = np.array([spectrum_weight(rho, sigma, k) for k in ks])
    drop = np.max(vals[:-1] - vals[1:]) if points > 1 else 0.0
    if drop > 1e-9:
        i = int(np.argmax(vals[:-1] - vals[1:]))
        raise MonotonicityError(
            f"tr(rho Pi) decreases by {drop:.3g} between K={ks[i]:.6g} and K={ks[i + 1]:.6g}"
        )


def info_spectrum_relative_entropy(
    rho,
    sigma,
    delta: float,
    resolution: float = DS_RESOLUTION,
    check_monotone: bool | None = None,
) -> EntropicValue:
    """D_s^delta(rho||sigma) = sup{K : tr(rho Pi_{rho <= 2^K sigma}) <= delta}.

    Bracketing starts from K in [−K_max, K_max] with
    K_max = 2 (log d + |log lambda_min(sigma)|) and widens by doubling if
    needed; bisection then runs to ``resolution`` bits and returns the
    lower end of the final bracket (a K that belongs to the set).
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    rho, sigma = _square(rho), _square(sigma)
    if rho.shape != sigma.shape:
        raise ValueError("dimension mismatch")
    ev = np.linalg.eigvalsh(sigma)
    pos = ev[support_mask(ev)]
    if pos.size == 0:
        raise ValueError("sigma is zero")
    kmax = 2.0 * (math.log2(rho.shape[0]) + abs(math.log2(pos.min()))) + 1.0
    lo, hi = -kmax, kmax
    for _ in range(12):
        if spectrum_weight(rho, sigma, lo) <= delta:
            break
        lo *= 2
    else:
        raise BracketError(f"no K >= {lo:.3g} with tr(rho Pi) <= delta={delta}")
    for _ in range(12):
        if spectrum_weight(rho, sigma, hi) > delta:
            break
        hi *= 2
    else:
        raise BracketError(
            f"tr(rho Pi) stays <= delta={delta} up to K={hi:.3g}; "
            "the supremum is unbounded (supp(rho) not inside supp(sigma)?)"
        )
    if CHECK_MONOTONE if check_monotone is None else check_monotone:
        _check_monotone(rho, sigma, lo, hi)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if spectrum_weight(rho, sigma, mid) <= delta:
            lo = mid
        else:
            hi = mid
    return EntropicValue(lo, "Ds", delta)


# ---------------------------------------------------------------------------
# hypothesis testing relative entropy
# ---------------------------------------------------------------------------


def neyman_pearson_test(rho, sigma, eps: float, iterations: int = 200) -> np.ndarray:
    """Optimal test Q with tr(Q rho) = 1 − eps minimizing tr(Q sigma).

    Q fills the eigenvectors of lam*rho − sigma in decreasing eigenvalue order,
    the last one with a fractional weight, so ties on the crossing eigenspace
    resolve on the lowest-index eigenvector.  lam is located by bisection on
    the nondecreasing map lam -> tr(rho {lam rho − sigma > 0}) (it is the
    derivative of a convex function).
    """
    rho, sigma = _square(rho), _square(sigma)
    target = 1.0 - eps

    def positive_weight(lam):
        a = lam * rho - sigma
        ev, u = np.linalg.eigh((a + a.conj().T) / 2)
        v = u[:, ev > 0]
        return float(np.real(np.einsum("ij,ik,kj->", v.conj(), rho, v)))

    lo, hi = 0.0, 1.0
    while positive_weight(hi) < target:
        hi *= 2
        if hi > 1e300:
            raise BracketError("Neyman-Pearson multiplier diverged")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if positive_weight(mid) < target:
            lo = mid
        else:
            hi = mid
    a = hi * rho - sigma
    ev, u = np.linalg.eigh((a + a.conj().T) / 2)
    order = np.argsort(-ev, kind="stable")
    weights = np.real(np.einsum("ji,jk,ki->i", u.conj(), rho, u))
    q = np.zeros(rho.shape[0])
    acc = 0.0
    for i in order:
        if acc >= target:
            break
        w = weights[i]
        if w <= 0:
            continue
        c = min(1.0, (target - acc) / w)
        q[i] = c
        acc += c * w
    return (u * q) @ u.conj().T


def hypothesis_testing_relative_entropy(rho, sigma, eps: float) -> EntropicValue:
    """D_H^eps(rho||sigma) = −log min{tr(Q sigma) : 0 <= Q <= 1, tr(Q rho) >= 1 − eps}."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    rho, sigma = _state(rho), _square(sigma)
    if rho.shape != sigma.shape:
        raise ValueError("dimension mismatch")
    if kernel_weight(rho, sigma) >= 1.0 - eps - 1e-12:
        return EntropicValue(math.inf, "DH", eps)
    q = neyman_pearson_test(rho, sigma, eps)
    beta = float(np.real(np.trace(q @ sigma)))
    return EntropicValue(-math.log2(beta), "DH", eps)


# ---------------------------------------------------------------------------
# normal distribution
# ---------------------------------------------------------------------------

_STD_NORMAL = NormalDist()


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def inverse_normal_cdf(eps: float) -> float:
    if not 0 < eps < 1:
        raise ValueError("argument must lie in (0, 1)")
    return _STD_NORMAL.inv_cdf(eps)
