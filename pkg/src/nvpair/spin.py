"""Spin operators, tensor products and Hermitian diagonalization.

Everything here works on small dense complex arrays (dimension <= 32). Operators
are expressed in units of hbar, in the S_z eigenbasis ordered m = s, s-1, ..., -s.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

HERMITIAN_RTOL = 1e-12
MAX_DIM = 32


class SpinAlgebraError(ValueError):
    """Rejected input to a spin-algebra routine."""


class EigenSolverError(RuntimeError):
    """Diagonalization failed its residual or orthonormality checks."""


@dataclass(frozen=True)
class SpinOperators:
    s: Fraction
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    @property
    def dim(self):
        return self.sz.shape[0]

    @property
    def identity(self):
        return np.eye(self.dim, dtype=complex)

    @property
    def splus(self):
        return self.sx + 1j * self.sy

    @property
    def sminus(self):
        return self.sx - 1j * self.sy

    @property
    def m_values(self):
        return np.real(np.diag(self.sz))


def spin_operators(s):
    """Angular momentum matrices for spin ``s`` (1/2 or 1).

    Parameters
    ----------
    s : float, Fraction or str
        Spin quantum number. ``0.5``, ``Fraction(1, 2)``, ``"1/2"`` and ``1``
        are all accepted.

    Returns
    -------
    SpinOperators
    """
    try:
        s = Fraction(s).limit_denominator(2)
    except (TypeError, ValueError) as err:
        raise SpinAlgebraError(f"cannot interpret spin {s!r}") from err
    if s not in (Fraction(1, 2), Fraction(1)):
        raise SpinAlgebraError(f"unsupported spin {s}; only 1/2 and 1 are supported")

    sf = float(s)
    m = sf - np.arange(int(2 * s) + 1)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    splus = np.diag(np.sqrt(sf * (sf + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    sminus = splus.conj().T
    sx = 0.5 * (splus + sminus)
    sy = -0.5j * (splus - sminus)
    sz = np.diag(m).astype(complex)
    return SpinOperators(s=s, sx=sx, sy=sy, sz=sz)


def _as_square(a, name="matrix"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SpinAlgebraError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SpinAlgebraError(f"{name} has non-finite entries")
    return a


def kron(a, b):
    """Kronecker product with ``a`` as the slowest-varying index."""
    return np.kron(_as_square(a, "a"), _as_square(b, "b"))


def kron_all(*ops):
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = kron(out, op)
    return out


def is_hermitian(h, rtol=HERMITIAN_RTOL):
    h = np.asarray(h)
    scale = np.max(np.abs(h)) if h.size else 0.0
    return np.max(np.abs(h - h.conj().T), initial=0.0) <= rtol * scale


def eigh(h):
    """Diagonalize a Hermitian matrix.

    Eigenvalues come back ascending. Each eigenvector column is rephased so its
    largest-magnitude component is real and positive; ties between components of
    equal magnitude go to the lowest index.

    Raises
    ------
    SpinAlgebraError
        If ``h`` is not square, not finite, or not Hermitian to 1e-12 relative.
    EigenSolverError
        If the LAPACK result fails the residual or orthonormality contract.
    """
    h = _as_square(h, "h")
    if h.shape[0] > MAX_DIM:
        raise SpinAlgebraError(f"dimension {h.shape[0]} exceeds {MAX_DIM}")
    if not is_hermitian(h):
        raise SpinAlgebraError("matrix is not Hermitian")
    h = 0.5 * (h + h.conj().T)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as err:
        raise EigenSolverError(str(err)) from err

    mags = np.abs(v)
    # round before argmax so numerically equal magnitudes tie-break by index
    lead = np.argmax(np.round(mags, 12), axis=0)
    phases = v[lead, np.arange(v.shape[1])]
    v = v * (np.abs(phases) / phases)[None, :]

    norm = max(np.linalg.norm(h, 2), np.finfo(float).tiny)
    resid = np.linalg.norm(h @ v - v * w[None, :], axis=0)
    if np.any(resid > 1e-10 * norm):
        raise EigenSolverError(f"eigenpair residual {resid.max():.3e} above bound")
    if np.max(np.abs(v.conj().T @ v - np.eye(len(w)))) > 1e-10:
        raise EigenSolverError("eigenvectors not orthonormal")
    return w, v


def expectation(op, state):
    """<state|op|state> for a normalized state vector."""
    op = _as_square(op, "op")
    state = np.asarray(state, dtype=complex).ravel()
    if state.shape[0] != op.shape[0]:
        raise SpinAlgebraError(
            f"state has length {state.shape[0]}, operator has dim {op.shape[0]}"
        )
    if abs(np.vdot(state, state).real - 1.0) > 1e-12:
        raise SpinAlgebraError("state is not normalized")
    return complex(np.vdot(state, op @ state))
