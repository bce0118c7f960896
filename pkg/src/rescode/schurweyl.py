"""Symmetric-group combinatorics and the collective U^{⊗n} twirl.

Combinatorial quantities (f^lambda, s_lambda(1^d), characters) are computed in
exact integer arithmetic; operators are floating point.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import numpy as np
from scipy.optimize import minimize

from .errors import SizeGuardError
from .qcore import matrix_to_json, projector, random_unitaries
from .twirl import TwirlChannel

PINV_RCOND = 1e-10
MC_CHUNK = 4096


# ---------------------------------------------------------------------------
# partitions and permutations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Partition:
    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        if any(p < 1 for p in parts) or any(a < b for a, b in zip(parts, parts[1:])):
            raise ValueError(f"{parts} is not a weakly decreasing list of positive integers")

    @classmethod
    def of(cls, *parts: int) -> "Partition":
        return cls(tuple(parts))

    @property
    def n(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def conjugate(self) -> "Partition":
        if not self.parts:
            return self
        return Partition(tuple(sum(1 for p in self.parts if p > j) for j in range(self.parts[0])))

    def cells(self) -> Iterator[tuple[int, int]]:
        for i, row in enumerate(self.parts):
            for j in range(row):
                yield i, j

    def hook(self, i: int, j: int) -> int:
        return self.parts[i] - j + self.conjugate().parts[j] - i - 1

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.parts)) + "}"


def partitions(n: int) -> list[Partition]:
    """All partitions of n, largest first part first (reverse lexicographic)."""
    if n < 0:
        raise ValueError("n must be nonnegative")

    def gen(rest: int, cap: int):
        if rest == 0:
            yield ()
            return
        for first in range(min(rest, cap), 0, -1):
            for tail in gen(rest - first, first):
                yield (first,) + tail

    return [Partition(p) for p in gen(n, n)]


@dataclass(frozen=True)
class Permutation:
    """A bijection on {0, ..., n−1}; ``mapping[i]`` is the image of i."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(x) for x in self.mapping)
        object.__setattr__(self, "mapping", m)
        if sorted(m) != list(range(len(m))):
            raise ValueError(f"{m} is not a permutation")

    @property
    def n(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def __matmul__(self, other: "Permutation") -> "Permutation":
        """Composition ``(self @ other)(i) = self(other(i))``."""
        return Permutation(tuple(self.mapping[j] for j in other.mapping))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return Permutation(tuple(inv))

    def cycles(self) -> list[tuple[int, ...]]:
        seen, out = set(), []
        for start in range(self.n):
            if start in seen:
                continue
            cyc, i = [], start
            while i not in seen:
                seen.add(i)
                cyc.append(i)
                i = self.mapping[i]
            out.append(tuple(cyc))
        return out

    @property
    def cycle_type(self) -> Partition:
        return Partition(tuple(sorted((len(c) for c in self.cycles()), reverse=True)))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def all(cls, n: int) -> list["Permutation"]:
        return [cls(p) for p in itertools.permutations(range(n))]


# ---------------------------------------------------------------------------
# exact combinatorics
# ---------------------------------------------------------------------------


def syt_count(lam: Partition) -> int:
    """Number of standard Young tableaux of shape lam (hook length formula)."""
    hooks = math.prod(lam.hook(i, j) for i, j in lam.cells())
    return math.factorial(lam.n) // hooks


def schur_at_ones(lam: Partition, d: int) -> int:
    """s_lam(1,...,1) with d ones, by the hook-content formula."""
    val = Fraction(1)
    for i, j in lam.cells():
        val *= Fraction(d + j - i, lam.hook(i, j))
    assert val.denominator == 1
    return int(val)


def class_size(mu: Partition) -> int:
    """Number of permutations of cycle type mu."""
    z = 1
    for k, group in itertools.groupby(mu.parts):
        m = len(list(group))
        z *= k**m * math.factorial(m)
    return math.factorial(mu.n) // z


@lru_cache(maxsize=None)
def _mn_character(beta: frozenset, mu: tuple[int, ...]) -> int:
    # Murnaghan-Nakayama on beta-sets: removing a rim hook of length r moves a
    # bead b to the empty position b − r; the sign counts beads jumped over.
    if not mu:
        return 1
    r, rest = mu[0], mu[1:]
    total = 0
    for b in beta:
        t = b - r
        if t < 0 or t in beta:
            continue
        jumped = sum(1 for c in beta if t < c < b)
        total += (-1) ** jumped * _mn_character((beta - {b}) | {t}, rest)
    return total


def character(lam: Partition, cycle_type: Partition) -> int:
    """Irreducible S_n character chi^lam evaluated on the class ``cycle_type``."""
    if lam.n != cycle_type.n:
        raise ValueError("partition sizes differ")
    k = len(lam)
    beta = frozenset(p + k - 1 - i for i, p in enumerate(lam.parts))
    return _mn_character(beta, cycle_type.parts)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def _guard(n: int, d: int, max_n: int = 5) -> None:
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive integers")
    if n > max_n or d**n > 243:
        raise SizeGuardError(f"(n={n}, d={d}) exceeds the n<={max_n}, d^n<=243 guard")


def permutation_index_map(pi: Permutation, d: int) -> np.ndarray:
    """s with P_pi |i> = |s[i]>: the factor in slot k moves to slot pi(k)."""
    n = pi.n
    digits = np.array(list(itertools.product(range(d), repeat=n)))
    out = np.empty_like(digits)
    out[:, list(pi.mapping)] = digits
    return np.ravel_multi_index(out.T, (d,) * n)


def permutation_operator(pi: Permutation, d: int) -> np.ndarray:
    s = permutation_index_map(pi, d)
    p = np.zeros((d**pi.n, d**pi.n))
    p[s, np.arange(d**pi.n)] = 1.0
    return p


def young_projector(lam: Partition, n: int, d: int) -> np.ndarray:
    """P^lam = f^lam / n! sum_pi chi^lam(pi) P_pi."""
    if lam.n != n:
        raise ValueError("partition does not match n")
    _guard(n, d, max_n=6)
    dim = d**n
    out = np.zeros((dim, dim))
    cols = np.arange(dim)
    for pi in Permutation.all(n):
        chi = character(lam, pi.cycle_type)
        if chi:
            out[permutation_index_map(pi, d), cols] += chi
    return out * syt_count(lam) / math.factorial(n)


@dataclass
class SchurWeylRow:
    partition: Partition
    f: int
    s: int
    projector: np.ndarray | None = field(default=None, repr=False)


@dataclass
class SchurWeylTable:
    n: int
    d: int
    rows: list[SchurWeylRow]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "rows": [{"partition": list(r.partition.parts), "f": r.f, "s": r.s} for r in self.rows],
            "sum_f_squared": sum(r.f**2 for r in self.rows),
            "sum_f_s": sum(r.f * r.s for r in self.rows),
        }


def schur_weyl_table(n: int, d: int, with_projectors: bool = False) -> SchurWeylTable:
    rows = []
    for lam in partitions(n):
        proj = young_projector(lam, n, d) if with_projectors else None
        rows.append(SchurWeylRow(lam, syt_count(lam), schur_at_ones(lam, d), proj))
    return SchurWeylTable(n, d, rows)


# ---------------------------------------------------------------------------
# collective twirl
# ---------------------------------------------------------------------------


class CollectiveTwirl(TwirlChannel):
    """The Haar twirl A -> ∫ U^{⊗n} A U^{⊗n†} dU, computed exactly.

    The twirl is the Hilbert-Schmidt orthogonal projection onto the commutant
    span{P_pi}; with Gram matrix W[pi, sigma] = tr(P_pi^† P_sigma) =
    d^{#cycles(pi^{-1} sigma)} it reads G(A) = sum_pi c_pi P_pi, c = W^+ t,
    t_sigma = tr(P_sigma^† A).
    """

    def __init__(self, n: int, d: int):
        _guard(n, d)
        self.n, self.d = n, d
        self.perms = Permutation.all(n)
        self.index_maps = np.array([permutation_index_map(p, d) for p in self.perms])
        gram = np.array(
            [[float(d ** len((p.inverse() @ q).cycles())) for q in self.perms] for p in self.perms]
        )
        self.gram = gram
        self.weingarten = np.linalg.pinv(gram, rcond=PINV_RCOND, hermitian=True)
        super().__init__(d**n, "collective", apply=self._twirl)

    def coefficients(self, a: np.ndarray) -> np.ndarray:
        cols = np.arange(self.dim_in)
        # tr(P_sigma^† A) = sum_i A[s_sigma(i), i]
        t = np.array([a[s, cols].sum() for s in self.index_maps])
        return self.weingarten @ t

    def _twirl(self, a: np.ndarray) -> np.ndarray:
        c = self.coefficients(np.asarray(a, dtype=complex))
        out = np.zeros((self.dim_in, self.dim_in), dtype=complex)
        cols = np.arange(self.dim_in)
        for coef, s in zip(c, self.index_maps):
            out[s, cols] += coef
        return out


def collective_twirl(n: int, d: int) -> CollectiveTwirl:
    return CollectiveTwirl(n, d)


def _tensor_power_batch(us: np.ndarray, n: int) -> np.ndarray:
    out = us
    for _ in range(n - 1):
        b, p, _ = out.shape
        d = us.shape[1]
        out = np.einsum("bij,bkl->bikjl", out, us).reshape(b, p * d, p * d)
    return out


def _mc_chunk(rho: np.ndarray, n: int, d: int, count: int, seed: int, chunk: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))
    un = _tensor_power_batch(random_unitaries(d, count, rng), n)
    return np.einsum("bij,jk,blk->il", un, rho, un.conj(), optimize=True)


def haar_twirl_mc(rho, n: int, d: int, samples: int, seed: int = 0, threads: int = 1) -> np.ndarray:
    """Monte-Carlo average of U^{⊗n} rho U^{⊗n†} over Haar-random U.

    Samples are drawn in fixed chunks of ``MC_CHUNK``; chunk k uses a Philox
    stream keyed by (seed, k), so the result does not depend on ``threads``.
    """
    rho = np.asarray(rho, dtype=complex)
    sizes = [min(MC_CHUNK, samples - s) for s in range(0, samples, MC_CHUNK)]
    jobs = [(rho, n, d, size, seed, k) for k, size in enumerate(sizes)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda a: _mc_chunk(*a), jobs))
    else:
        parts = [_mc_chunk(*a) for a in jobs]
    total = np.zeros_like(rho)
    for p in parts:
        total += p
    return total / samples


# ---------------------------------------------------------------------------
# states twirling to the maximally mixed state
# ---------------------------------------------------------------------------


class NotFound:
    """Returned when no state with the requested twirl was found."""

    def __init__(self, reason: str):
        self.reason = reason

    def __bool__(self) -> bool:
        return False

    def __repr__(self) -> str:
        return f"NotFound({self.reason!r})"


def _block_basis(p: np.ndarray) -> np.ndarray:
    ev, u = np.linalg.eigh(p)
    return u[:, ev > 0.5]


def find_block_state(
    twirl: CollectiveTwirl, p_lam: np.ndarray, budget: int = 1000, seed: int = 0, tol: float = 1e-10
) -> np.ndarray | NotFound:
    """A unit vector x in range(P^lam) with G(|x><x|) = P^lam / tr P^lam.

    Each restart starts from a uniform-magnitude, random-phase combination of
    an orthonormal block basis and is refined by L-BFGS on
    F(x) = ‖G(xx^†) − P^lam/tr P^lam‖^2, whose gradient is 4 (G(xx^†) − target) x
    because G is a self-adjoint idempotent fixing the target.
    """
    basis = _block_basis(p_lam)
    r = basis.shape[1]
    if r == 0:
        return NotFound("empty block")
    target = p_lam / r
    rng = np.random.default_rng(seed)

    def unpack(z):
        return basis @ (z[:r] + 1j * z[r:])

    def fun(z):
        x = unpack(z)
        res = twirl(np.outer(x, x.conj())) - target
        g = basis.conj().T @ (4 * res @ x)
        return float(np.real(np.sum(np.abs(res) ** 2))), np.concatenate([g.real, g.imag])

    for _ in range(budget):
        y0 = np.exp(2j * np.pi * rng.random(r)) / math.sqrt(r)
        sol = minimize(fun, np.concatenate([y0.real, y0.imag]), jac=True, method="L-BFGS-B",
                       options={"maxiter": 2000, "gtol": 1e-14, "ftol": 1e-30})
        x = unpack(sol.x)
        x = x / np.linalg.norm(x)
        if np.max(np.abs(twirl(np.outer(x, x.conj())) - target)) < tol:
            return x
    return NotFound(f"no block state within {budget} restarts")


def maximally_twirled_state(n: int, d: int, budget: int = 1000, seed: int = 0) -> np.ndarray | NotFound:
    """A pure state on (C^d)^{⊗n} whose collective twirl is 1/d^n, or NotFound.

    Inside the block of lam the twirl acts as (1/s_lam) 1 ⊗ tr_U, so a block
    state exists only if s_lam(1^d) >= f^lam; blocks violating this are
    reported immediately instead of burning the restart budget.
    """
    _guard(n, d)
    tw = collective_twirl(n, d)
    x = np.zeros(d**n, dtype=complex)
    for k, row in enumerate(schur_weyl_table(n, d, with_projectors=True).rows):
        if row.s == 0:
            continue
        if row.s < row.f:
            return NotFound(f"block {row.partition} has s={row.s} < f={row.f}")
        xl = find_block_state(tw, row.projector, budget=budget, seed=seed + k)
        if isinstance(xl, NotFound):
            return xl
        x += math.sqrt(row.f * row.s / d**n) * xl
    return x


# ---------------------------------------------------------------------------
# three-qubit worked example
# ---------------------------------------------------------------------------

P21_REFERENCE = np.array(
    [
        [0, 0, 0, 0, 0, 0, 0, 0],
        [0, 2, -1, 0, -1, 0, 0, 0],
        [0, -1, 2, 0, -1, 0, 0, 0],
        [0, 0, 0, 2, 0, -1, -1, 0],
        [0, -1, -1, 0, 2, 0, 0, 0],
        [0, 0, 0, -1, 0, 2, -1, 0],
        [0, 0, 0, -1, 0, -1, 2, 0],
        [0, 0, 0, 0, 0, 0, 0, 0],
    ]
) / 3.0

X21_REFERENCE = np.array([0, -2, 1, -math.sqrt(3), 1, math.sqrt(3), 0, 0]) / (2 * math.sqrt(3))
X3_REFERENCE = np.array([0, 1, 1, 1, 1, 1, 1, 0]) / math.sqrt(6)


def three_qubit_demo() -> dict:
    """Young projectors, block states and the maximally mixed twirl for n=3, d=2."""
    tw = collective_twirl(3, 2)
    p21 = young_projector(Partition.of(2, 1), 3, 2)
    p3 = young_projector(Partition.of(3), 3, 2)
    p111 = young_projector(Partition.of(1, 1, 1), 3, 2)
    x = (X21_REFERENCE + X3_REFERENCE) / math.sqrt(2)
    out = tw(projector(x))
    residuals = {
        "P21_vs_reference": float(np.max(np.abs(p21 - P21_REFERENCE))),
        "P111_norm": float(np.max(np.abs(p111))),
        "P21_x21_fixed": float(np.max(np.abs(p21 @ X21_REFERENCE - X21_REFERENCE))),
        "P3_x3_fixed": float(np.max(np.abs(p3 @ X3_REFERENCE - X3_REFERENCE))),
        "x21_block_twirl": float(np.max(np.abs(tw(projector(X21_REFERENCE)) - p21 / 4))),
        "x3_block_twirl": float(np.max(np.abs(tw(projector(X3_REFERENCE)) - p3 / 4))),
        "twirl_vs_maximally_mixed": float(np.max(np.abs(out - np.eye(8) / 8))),
        "projectors_sum_to_identity": float(np.max(np.abs(p21 + p3 + p111 - np.eye(8)))),
    }
    return {
        "P21": p21,
        "P3": p3,
        "x21": X21_REFERENCE,
        "x3": X3_REFERENCE,
        "x": x,
        "twirled": out,
        "residuals": residuals,
    }


def demo_to_json(report: dict) -> dict:
    def enc(v):
        v = np.asarray(v)
        if v.ndim == 1:
            return {"re": v.real.tolist(), "im": v.imag.tolist()}
        return matrix_to_json(v)

    out = {k: enc(v) for k, v in report.items() if k != "residuals"}
    out["residuals"] = report["residuals"]
    return out
