"""Resource destroying maps: group twirls and their closed forms."""

from __future__ import annotations

import itertools
import math
import warnings
from typing import Sequence

import numpy as np

from .errors import ClosureError, SizeGuardError
from .qcore import (
    QuantumChannel,
    ket,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    vec,
)

MAX_GROUP_ORDER = 4096
CLOSURE_CHECK_LIMIT = 64
TWIRL_TOL = 1e-8

TAGS = ("dephasing", "depolarizing", "local", "finite_group", "permutation", "collective", "custom")


class FiniteUnitaryGroup:
    """An explicit list of unitaries closed under multiplication up to phase."""

    def __init__(self, elements, labels: Sequence[str] | None = None, check: bool = True):
        els = np.asarray(elements, dtype=complex)
        if els.ndim != 3 or els.shape[1] != els.shape[2]:
            raise ValueError("elements must have shape (order, dim, dim)")
        if len(els) > MAX_GROUP_ORDER:
            raise SizeGuardError(f"group order {len(els)} exceeds {MAX_GROUP_ORDER}")
        self.elements = els
        self.dim = els.shape[1]
        self.labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(len(els)))
        if len(self.labels) != len(els):
            raise ValueError("one label per element required")
        if check:
            self.check()

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, i) -> np.ndarray:
        return self.elements[i]

    def _phase_overlaps(self, mats: np.ndarray) -> np.ndarray:
        # |tr(A^dag B)| / d for every candidate A in mats and element B
        return np.abs(np.einsum("aij,bij->ab", mats.conj(), self.elements)) / self.dim

    def check(self, tol: float = 1e-9) -> None:
        eye = np.eye(self.dim)
        uu = np.einsum("gji,gjk->gik", self.elements.conj(), self.elements)
        if np.max(np.abs(uu - eye)) > tol:
            raise ClosureError("group element is not unitary")
        if np.max(self._phase_overlaps(eye[None])) < 1 - 1e-8:
            raise ClosureError("group does not contain the identity (up to phase)")
        if len(self) > CLOSURE_CHECK_LIMIT:
            warnings.warn(f"closure check skipped for group of order {len(self)}", stacklevel=3)
            return
        prods = np.einsum("aij,bjk->abik", self.elements, self.elements).reshape(-1, self.dim, self.dim)
        if np.min(np.max(self._phase_overlaps(prods), axis=1)) < 1 - 1e-8:
            raise ClosureError("group is not closed under multiplication")

    def tensor(self, other: "FiniteUnitaryGroup") -> "FiniteUnitaryGroup":
        """Direct product G x H acting as U ⊗ V."""
        els = np.einsum("aij,bkl->abikjl", self.elements, other.elements)
        d = self.dim * other.dim
        labels = [f"{a}|{b}" for a in self.labels for b in other.labels]
        return FiniteUnitaryGroup(els.reshape(-1, d, d), labels, check=False)

    def power(self, n: int) -> "FiniteUnitaryGroup":
        out = self
        for _ in range(n - 1):
            out = out.tensor(self)
        return out

    def to_json(self) -> list:
        return [matrix_to_json(u) for u in self.elements]

    @classmethod
    def from_json(cls, obj: list) -> "FiniteUnitaryGroup":
        return cls([matrix_from_json(m) for m in obj])


class TwirlChannel(QuantumChannel):
    """An idempotent, self-adjoint channel tagged with the family it comes from."""

    def __init__(self, dim: int, tag: str, superoperator=None, kraus=None, apply=None, group=None):
        if tag not in TAGS:
            raise ValueError(f"unknown twirl tag {tag!r}")
        super().__init__(dim, dim, superoperator=superoperator, kraus=kraus, apply=apply)
        self.tag = tag
        self.group = group

    def self_adjointness_residual(self, probes: int = 0, seed: int = 0) -> float:
        if probes <= 0:
            s = self.superoperator
            return float(np.max(np.abs(s - s.conj().T)))
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(probes):
            x = rng.standard_normal((self.dim_in,) * 2) + 1j * rng.standard_normal((self.dim_in,) * 2)
            y = rng.standard_normal((self.dim_in,) * 2) + 1j * rng.standard_normal((self.dim_in,) * 2)
            lhs = np.vdot(y, self(x))
            rhs = np.vdot(self(y), x)
            worst = max(worst, abs(lhs - rhs))
        return float(worst)

    def tensor(self, other: QuantumChannel) -> "TwirlChannel":
        base = super().tensor(other)
        group = None
        if self.group is not None and getattr(other, "group", None) is not None:
            group = self.group.tensor(other.group)
        return TwirlChannel(base.dim_in, "custom" if getattr(other, "tag", None) != self.tag else self.tag,
                            apply=base._apply, group=group)

    def __repr__(self) -> str:
        return f"TwirlChannel(tag={self.tag!r}, dim={self.dim_in})"


# ---------------------------------------------------------------------------
# finite groups
# ---------------------------------------------------------------------------


def z_group(d: int) -> FiniteUnitaryGroup:
    """Powers of the clock operator diag(omega^k); its twirl is complete dephasing."""
    w = np.exp(2j * np.pi * np.arange(d) / d)
    return FiniteUnitaryGroup([np.diag(w**k) for k in range(d)], [f"Z^{k}" for k in range(d)])


def shift_operator(d: int) -> np.ndarray:
    return np.roll(np.eye(d), 1, axis=0).astype(complex)


def heisenberg_weyl_group(d: int) -> FiniteUnitaryGroup:
    """The d^2 Weyl operators X^a Z^b (a unitary 1-design, closed up to phase)."""
    x = shift_operator(d)
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    els, labels = [], []
    for a in range(d):
        for b in range(d):
            els.append(np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, b))
            labels.append(f"X^{a}Z^{b}")
    return FiniteUnitaryGroup(els, labels, check=d * d <= CLOSURE_CHECK_LIMIT)


def pauli_group_on_A(d_a: int, d_b: int) -> FiniteUnitaryGroup:
    """Weyl operators on A tensored with the identity on B."""
    hw = heisenberg_weyl_group(d_a)
    eye = np.eye(d_b)
    return FiniteUnitaryGroup([np.kron(u, eye) for u in hw.elements], hw.labels,
                              check=len(hw) <= CLOSURE_CHECK_LIMIT)


def subsystem_permutation_matrix(perm: Sequence[int], d: int) -> np.ndarray:
    """Operator moving the content of tensor slot k to slot perm[k]."""
    n = len(perm)
    inv = np.argsort(perm)
    eye = np.eye(d**n).reshape([d] * n + [d**n])
    return eye.transpose(list(inv) + [n]).reshape(d**n, d**n).astype(complex)


def permutation_group(n: int, d: int) -> FiniteUnitaryGroup:
    _guard_permutation(n, d)
    perms = list(itertools.permutations(range(n)))
    return FiniteUnitaryGroup([subsystem_permutation_matrix(p, d) for p in perms],
                              ["".join(map(str, p)) for p in perms], check=len(perms) <= CLOSURE_CHECK_LIMIT)


def _guard_permutation(n: int, d: int) -> None:
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    if n > 5 or d**n > 243:
        raise SizeGuardError(f"permutation twirl for n={n}, d={d} exceeds the n<=5, d^n<=243 guard")


# ---------------------------------------------------------------------------
# twirls
# ---------------------------------------------------------------------------


def finite_group_twirl(g: FiniteUnitaryGroup) -> TwirlChannel:
    els = g.elements
    order = len(g)

    def apply(rho):
        return np.einsum("gij,jk,glk->il", els, rho, els.conj(), optimize=True) / order

    kraus = [u / math.sqrt(order) for u in els] if order * g.dim**4 <= 2**24 else None
    return TwirlChannel(g.dim, "finite_group", kraus=kraus, apply=apply, group=g)


def _diag_superop(mask: np.ndarray) -> np.ndarray:
    return np.diag(vec(mask).astype(complex))


def dephasing_channel(dim: int) -> TwirlChannel:
    def apply(rho):
        return np.diag(np.diagonal(rho)).astype(complex)

    sup = _diag_superop(np.eye(dim)) if dim <= 64 else None
    return TwirlChannel(dim, "dephasing", superoperator=sup, apply=apply, group=z_group(dim) if dim <= 64 else None)


def depolarizing_channel(dim: int) -> TwirlChannel:
    def apply(rho):
        return np.trace(rho) * np.eye(dim, dtype=complex) / dim

    v = vec(np.eye(dim))
    sup = np.outer(v, v).astype(complex) / dim if dim <= 64 else None
    return TwirlChannel(dim, "depolarizing", superoperator=sup, apply=apply,
                        group=heisenberg_weyl_group(dim) if dim <= 64 else None)


def local_unital_twirl(dims: tuple[int, int]) -> TwirlChannel:
    """rho_AB -> 1_A/d_A ⊗ tr_A rho_AB."""
    d_a, d_b = dims

    def apply(rho):
        return np.kron(np.eye(d_a) / d_a, partial_trace(rho, [d_a, d_b], [1]))

    group = pauli_group_on_A(d_a, d_b) if d_a * d_a <= MAX_GROUP_ORDER else None
    return TwirlChannel(d_a * d_b, "local", apply=apply, group=group)


def permutation_twirl(n: int, d: int) -> TwirlChannel:
    g = permutation_group(n, d)
    idx = [np.argmax(np.abs(p), axis=0) for p in g.elements]  # P|i> = |idx[i]>

    def apply(rho):
        out = np.zeros_like(rho, dtype=complex)
        for s in idx:
            out[np.ix_(s, s)] += rho
        return out / len(idx)

    return TwirlChannel(d**n, "permutation", apply=apply, group=g)


def symmetric_projector(d: int) -> np.ndarray:
    swap = subsystem_permutation_matrix((1, 0), d)
    return (np.eye(d * d) + swap) / 2


def collective_twirl_two_party(rho, d: int) -> np.ndarray:
    """Closed-form U⊗U twirl of a two-qudit operator."""
    rho = np.asarray(rho, dtype=complex)
    ps = symmetric_projector(d)
    d_s = d * (d + 1) // 2
    p_s = float(np.real(np.trace(rho @ ps)))
    tr = float(np.real(np.trace(rho)))
    out = p_s * ps / d_s
    if d > 1:
        out = out + (tr - p_s) * (np.eye(d * d) - ps) / (d * d - d_s)
    return out


def collective_twirl_two_party_channel(d: int) -> TwirlChannel:
    return TwirlChannel(d * d, "collective", apply=lambda r: collective_twirl_two_party(r, d))


# ---------------------------------------------------------------------------
# distinguished states
# ---------------------------------------------------------------------------


def optimal_bipartite_state(d: int) -> np.ndarray:
    """sqrt((d+1)/2d)|00> + sqrt((d-1)/2d)(|01> − |10>)/sqrt2, which U⊗U twirls to 1/d^2."""
    if d < 2:
        raise ValueError("need d >= 2 for a nonempty antisymmetric subspace")
    psi_s = ket((0, 0), (d, d))
    psi_a = (ket((0, 1), (d, d)) - ket((1, 0), (d, d))) / math.sqrt(2)
    return math.sqrt((d + 1) / (2 * d)) * psi_s + math.sqrt((d - 1) / (2 * d)) * psi_a


def uniform_superposition(d: int) -> np.ndarray:
    return np.ones(d, dtype=complex) / math.sqrt(d)


def bell_state() -> np.ndarray:
    return (ket((0, 0), (2, 2)) + ket((1, 1), (2, 2))) / math.sqrt(2)


def permutation_coding_state(n: int, d: int) -> np.ndarray:
    """|0,1,...,n−1> for d >= n; otherwise |0..d−1>^{⊗ floor(n/d)} ⊗ |0..r−1>, r = n mod d."""
    if d >= n:
        digits = list(range(n))
    else:
        q, r = divmod(n, d)
        digits = list(range(d)) * q + list(range(r))
    return ket(tuple(digits), (d,) * n)


def permutation_overlaps(psi, n: int, d: int) -> np.ndarray:
    """Gram matrix |<P_a psi|P_b psi>| over all n! subsystem permutations."""
    vecs = np.array([subsystem_permutation_matrix(p, d) @ psi for p in itertools.permutations(range(n))])
    return np.abs(vecs.conj() @ vecs.T)

