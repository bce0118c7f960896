"""Hermitian linear algebra, states, channels and encoding-constraint checks.

Conventions used throughout the package:

* logarithms are base 2;
* in a tensor product the leftmost factor is the slowest-varying index
  (``np.kron`` ordering);
* operators are vectorized by stacking columns, so that
  ``vec(A X B) = (B.T kron A) vec(X)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidChannelError, InvalidStateError

HERM_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
CHANNEL_TOL = 1e-9
CONSTRAINT_TOL = 1e-8
SUPPORT_CUTOFF = 1e-12


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _square(a, what="matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} must be square, got shape {a.shape}")
    return a


def hermiticity_residual(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def as_hermitian(a, tol: float = HERM_TOL) -> np.ndarray:
    """Return ``a`` as a complex Hermitian array, raising if it is not."""
    a = _square(a, "observable")
    if hermiticity_residual(a) > tol:
        raise ValueError("matrix is not Hermitian")
    return a


def as_density_matrix(rho, tol: float = TRACE_TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, PSD (all to ``tol``)."""
    rho = _square(rho, "density matrix")
    if hermiticity_residual(rho) > HERM_TOL:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidStateError(f"trace is {np.trace(rho).real:.3g}, not 1")
    if np.linalg.eigvalsh(rho)[0] < -PSD_TOL:
        raise InvalidStateError("density matrix has a negative eigenvalue")
    return rho


def as_pure_state(psi, tol: float = 1e-10) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(psi) - 1) > tol:
        raise InvalidStateError("state vector is not normalized")
    return psi


def projector(psi) -> np.ndarray:
    """|psi><psi| for a state vector."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def ket(index: int | Sequence[int], dims: int | Sequence[int]) -> np.ndarray:
    """Computational basis vector; ``ket((0, 1), (2, 2))`` is |01>."""
    if isinstance(index, (int, np.integer)):
        index, dims = (index,), (dims,)
    flat = int(np.ravel_multi_index(tuple(index), tuple(dims)))
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    v[flat] = 1.0
    return v


# ---------------------------------------------------------------------------
# basic linear algebra
# ---------------------------------------------------------------------------


def tensor_product(*ops) -> np.ndarray:
    """Kronecker product of any number of operators or vectors."""
    if len(ops) == 1 and not isinstance(ops[0], np.ndarray):
        ops = tuple(ops[0])
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def tensor_power(op, n: int) -> np.ndarray:
    return tensor_product(*([op] * n)) if n > 0 else np.ones((1, 1), dtype=complex)


def partial_trace(state, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced operator on the subsystems listed in ``keep``.

    The kept subsystems appear in increasing index order in the result.
    """
    state = _square(state, "state")
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != state.shape[0]:
        raise ValueError(f"dims {dims} do not match operator dimension {state.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range")
    n = len(dims)
    t = state.reshape(dims + dims)
    # einsum labels: rows 0..n-1, columns n..2n-1; traced systems share a label
    row = list(range(n))
    col = [k + n if k in keep else k for k in range(n)]
    out = [k for k in keep] + [k + n for k in keep]
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1
    return np.einsum(t, row + col, out).reshape(kept_dim, kept_dim)


def hermitian_eig(a, tol: float = HERM_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian matrix."""
    a = as_hermitian(a, tol)
    return np.linalg.eigh((a + a.conj().T) / 2)


def support_mask(eigenvalues: np.ndarray, cutoff: float = SUPPORT_CUTOFF) -> np.ndarray:
    """Eigenvalues treated as nonzero: above ``cutoff`` times the largest one."""
    top = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    return eigenvalues > cutoff * top


def matrix_fn_on_support(
    a, fn: Callable[[np.ndarray], np.ndarray], cutoff: float = SUPPORT_CUTOFF
) -> np.ndarray:
    """Apply ``fn`` to the nonzero spectrum of a PSD matrix; the kernel maps to 0.

    Eigenvalues below ``cutoff`` relative to the largest eigenvalue count as
    zero, which realizes the 0 log 0 = 0 convention for ``fn = np.log2``.
    """
    ev, u = hermitian_eig(a)
    top = float(np.max(np.abs(ev))) if ev.size else 0.0
    if ev.size and ev[0] < -max(PSD_TOL, 1e-9 * top):
        raise ValueError("matrix is not positive semidefinite")
    keep = support_mask(ev, cutoff)
    out = np.zeros_like(ev)
    with np.errstate(all="ignore"):
        vals = np.asarray(fn(ev[keep]), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("function undefined on a retained eigenvalue")
    out[keep] = vals
    return (u * out) @ u.conj().T


def matrix_log2(a, cutoff: float = SUPPORT_CUTOFF) -> np.ndarray:
    return matrix_fn_on_support(a, np.log2, cutoff)


def matrix_power_on_support(a, p: float, cutoff: float = SUPPORT_CUTOFF) -> np.ndarray:
    return matrix_fn_on_support(a, lambda x: x**p, cutoff)


def support_projector(a, cutoff: float = SUPPORT_CUTOFF) -> np.ndarray:
    ev, u = hermitian_eig(a)
    v = u[:, support_mask(ev, cutoff)]
    return v @ v.conj().T


# ---------------------------------------------------------------------------
# vectorization
# ---------------------------------------------------------------------------


def vec(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------


class QuantumChannel:
    """A linear map on operators, stored as a superoperator.

    Either ``superoperator`` (shape ``(dim_out**2, dim_in**2)``, column-stacking
    convention), ``kraus`` or ``apply`` must be given.  When only ``apply`` is
    supplied the superoperator is built lazily from it the first time it is
    needed, so large structured channels (collective twirls on hundreds of
    dimensions) stay usable through :meth:`__call__`.
    """

    def __init__(
        self,
        dim_in: int,
        dim_out: int | None = None,
        superoperator: np.ndarray | None = None,
        kraus: Sequence[np.ndarray] | None = None,
        apply: Callable[[np.ndarray], np.ndarray] | None = None,
    ):
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_in if dim_out is None else dim_out)
        self.kraus = None if kraus is None else tuple(np.asarray(k, dtype=complex) for k in kraus)
        self._apply = apply
        if superoperator is not None:
            s = np.asarray(superoperator, dtype=complex)
            if s.shape != (self.dim_out**2, self.dim_in**2):
                raise InvalidChannelError(f"superoperator has shape {s.shape}")
            self.__dict__["superoperator"] = s
        elif self.kraus is None and apply is None:
            raise InvalidChannelError("need a superoperator, Kraus operators or an apply function")

    @cached_property
    def superoperator(self) -> np.ndarray:
        if self.kraus is not None:
            return sum(np.kron(k.conj(), k) for k in self.kraus)
        d = self.dim_in
        s = np.empty((self.dim_out**2, d * d), dtype=complex)
        for j in range(d):
            for i in range(d):
                e = np.zeros((d, d), dtype=complex)
                e[i, j] = 1.0
                s[:, i + j * d] = vec(self._apply(e))
        return s

    def __call__(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim_in, self.dim_in):
            raise ValueError(f"channel expects {self.dim_in}x{self.dim_in} input, got {rho.shape}")
        if "superoperator" not in self.__dict__ and self._apply is not None:
            return np.asarray(self._apply(rho), dtype=complex)
        if "superoperator" not in self.__dict__ and self.kraus is not None:
            return sum(k @ rho @ k.conj().T for k in self.kraus)
        return unvec(self.superoperator @ vec(rho), self.dim_out)

    def compose(self, other: "QuantumChannel") -> "QuantumChannel":
        """``self ∘ other`` (apply ``other`` first)."""
        if other.dim_out != self.dim_in:
            raise ValueError("dimension mismatch in composition")
        return QuantumChannel(other.dim_in, self.dim_out, self.superoperator @ other.superoperator)

    def tensor(self, other: "QuantumChannel") -> "QuantumChannel":
        """Channel acting as ``self ⊗ other`` on a bipartite input."""
        da, db = self.dim_in, other.dim_in
        ea, eb = self.dim_out, other.dim_out

        def apply(x):
            x = x.reshape(da, db, da, db)
            # apply self on A and other on B via their superoperators
            sa = self.superoperator.reshape(ea, ea, da, da)  # [b_out, a_out, j_in, i_in]
            sb = other.superoperator.reshape(eb, eb, db, db)
            y = np.einsum("BAji,DClk,ikjl->ACBD", sa, sb, x)
            return y.reshape(ea * eb, ea * eb)

        return QuantumChannel(da * db, ea * eb, apply=apply)

    def choi(self) -> np.ndarray:
        """Choi matrix sum_ij |i><j| ⊗ E(|i><j|) (input factor first)."""
        di, do = self.dim_in, self.dim_out
        t = self.superoperator.reshape(do, do, di, di)  # [b, a, j, i]
        return t.transpose(3, 1, 2, 0).reshape(di * do, di * do)

    def adjoint_superoperator(self) -> np.ndarray:
        """Superoperator of the Hilbert-Schmidt adjoint map."""
        return self.superoperator.conj().T

    def residuals(self) -> dict:
        """Trace-preservation, complete-positivity and Kraus-consistency residuals."""
        j = self.choi()
        tp = partial_trace(j, [self.dim_in, self.dim_out], [0])
        out = {
            "trace_preserving": float(np.max(np.abs(tp - np.eye(self.dim_in)))),
            "choi_min_eig": float(np.linalg.eigvalsh((j + j.conj().T) / 2)[0]),
        }
        if self.kraus is not None:
            kk = sum(k.conj().T @ k for k in self.kraus)
            out["kraus_completeness"] = float(np.max(np.abs(kk - np.eye(self.dim_in))))
            ks = sum(np.kron(k.conj(), k) for k in self.kraus)
            out["kraus_superoperator"] = float(np.max(np.abs(ks - self.superoperator)))
        return out

    def validate(self, tol: float = CHANNEL_TOL) -> "QuantumChannel":
        r = self.residuals()
        if r["trace_preserving"] > tol:
            raise InvalidChannelError(f"not trace preserving (residual {r['trace_preserving']:.3g})")
        if r["choi_min_eig"] < -tol:
            raise InvalidChannelError("not completely positive")
        for key in ("kraus_completeness", "kraus_superoperator"):
            if r.get(key, 0.0) > tol:
                raise InvalidChannelError(f"{key} residual {r[key]:.3g}")
        return self

    def idempotency_residual(self, probes: int = 0, seed: int = 0) -> float:
        """max |E∘E − E|; estimated on random operators when ``probes`` > 0."""
        if probes <= 0:
            s = self.superoperator
            return float(np.max(np.abs(s @ s - s)))
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(probes):
            x = random_hermitian(self.dim_in, rng)
            y = self(x)
            worst = max(worst, float(np.max(np.abs(self(y) - y))))
        return worst

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim_in={self.dim_in}, dim_out={self.dim_out})"


def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel(dim, dim, np.eye(dim * dim, dtype=complex))


def unitary_channel(u) -> QuantumChannel:
    u = _square(u, "unitary")
    return QuantumChannel(u.shape[0], u.shape[0], np.kron(u.conj(), u), kraus=[u])


def kraus_channel(kraus: Sequence[np.ndarray]) -> QuantumChannel:
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    return QuantumChannel(ks[0].shape[1], ks[0].shape[0], kraus=ks)


def apply_channel(ch: QuantumChannel, state) -> np.ndarray:
    return ch(state)


@dataclass(frozen=True)
class ConstraintCheck:
    ok: bool
    residual_after: float  # ‖E∘D − D‖
    residual_before: float  # ‖D∘E − D‖

    def __bool__(self) -> bool:
        return self.ok


def verify_encoding_constraint(
    enc: QuantumChannel, rdm: QuantumChannel, tol: float = CONSTRAINT_TOL
) -> ConstraintCheck:
    """Check that ``enc`` satisfies E∘D = D and D∘E = D for the idempotent map D."""
    if enc.dim_in != rdm.dim_in or enc.dim_out != rdm.dim_out or rdm.dim_in != rdm.dim_out:
        raise ValueError("encoding and resource destroying map must act on the same space")
    d = rdm.superoperator
    if float(np.max(np.abs(d @ d - d))) > tol:
        raise InvalidChannelError("resource destroying map is not idempotent")
    e = enc.superoperator
    r1 = float(np.max(np.abs(e @ d - d)))
    r2 = float(np.max(np.abs(d @ e - d)))
    return ConstraintCheck(r1 < tol and r2 < tol, r1, r2)


# ---------------------------------------------------------------------------
# random objects
# ---------------------------------------------------------------------------


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def random_unitary(d: int, rng=None) -> np.ndarray:
    """Haar-random unitary: QR of a Ginibre matrix with the phase fix."""
    rng = _rng(rng)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def random_unitaries(d: int, count: int, rng=None) -> np.ndarray:
    """Batch of ``count`` Haar-random unitaries, shape (count, d, d)."""
    rng = _rng(rng)
    z = (rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def random_pure_state(d: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density_matrix(d: int, rng=None, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt (rank = d) or induced-measure random state."""
    rng = _rng(rng)
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(d: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


# ---------------------------------------------------------------------------
# JSON formats
# ---------------------------------------------------------------------------


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"dim": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    a = re + 1j * im
    if "dim" in obj and a.shape != (obj["dim"], obj["dim"]):
        raise ValueError(f"matrix shape {a.shape} disagrees with dim={obj['dim']}")
    return a


def channel_to_json(ch: QuantumChannel) -> dict:
    s = ch.superoperator
    return {"dim_in": ch.dim_in, "dim_out": ch.dim_out, "superoperator": {"re": s.real.tolist(), "im": s.imag.tolist()}}


def channel_from_json(obj: dict) -> QuantumChannel:
    s = obj["superoperator"]
    mat = np.asarray(s["re"], dtype=float) + 1j * np.asarray(s.get("im", 0.0), dtype=float)
    return QuantumChannel(obj["dim_in"], obj["dim_out"], mat)


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return matrix_from_json(json.load(fh))


def save_matrix(path, a) -> None:
    with open(path, "w") as fh:
        json.dump(matrix_to_json(a), fh)
