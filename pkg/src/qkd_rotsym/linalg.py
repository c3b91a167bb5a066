"""Small complex linear-algebra kernel for 2x2 / 4x4 operators and 2-d / 4-d kets.

Matrices and kets are plain complex numpy arrays (kets are 1-d).  Ordering of the
bipartite space is fixed: ``index = 2 * a + b`` with the A register as the slow
(left) Kronecker factor.
"""

from __future__ import annotations

import numpy as np

ALLOWED_DIMS = (1, 2, 4)
ALGEBRA_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
I2.flags.writeable = False
I4.flags.writeable = False


def as_matrix(a) -> np.ndarray:
    """Coerce to a complex array and check shape/finiteness."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim not in (1, 2):
        raise ValueError(f"expected a ket or matrix, got array of ndim {arr.ndim}")
    if any(d not in ALLOWED_DIMS for d in arr.shape):
        raise ValueError(f"dimensions must be in {ALLOWED_DIMS}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entry in matrix")
    return arr


def multiply(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def add(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"cannot add shapes {a.shape} and {b.shape}")
    return a + b


def scale(a, c: complex) -> np.ndarray:
    c = complex(c)
    if not np.isfinite(c):
        raise ValueError("non-finite scale factor")
    return c * as_matrix(a)


def compose(a, b=None, mode: str = "multiply", c: complex | None = None) -> np.ndarray:
    """Dispatch to :func:`multiply`, :func:`add` or :func:`scale`.

    ``mode="scale"`` ignores ``b`` and multiplies ``a`` by ``c``.
    """
    if mode == "multiply":
        return multiply(a, b)
    if mode == "add":
        return add(a, b)
    if mode == "scale":
        if c is None:
            raise ValueError("scale mode needs a scalar c")
        return scale(a, c)
    raise ValueError(f"unknown compose mode {mode!r}")


def adjoint(a) -> np.ndarray:
    """Conjugate transpose; a 1-d ket is returned conjugated (as a bra)."""
    a = as_matrix(a)
    return a.conj().T


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product, ``a`` is the A (slow) register."""
    return np.kron(as_matrix(a), as_matrix(b))


def trace_inner(a, b) -> complex:
    """Hilbert-Schmidt pairing tr(a^dagger b)."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"trace_inner needs equal shapes, got {a.shape} and {b.shape}")
    return complex(np.sum(a.conj() * b))


def projector(ket) -> np.ndarray:
    """|v><v| for a 1-d ket."""
    v = as_matrix(ket)
    if v.ndim != 1:
        raise ValueError("projector expects a 1-d ket")
    return np.outer(v, v.conj())


def max_abs(a) -> float:
    """Entry-wise max norm."""
    return float(np.max(np.abs(np.asarray(a))))


def hermitian_sqrt_inv(a, tol: float = ALGEBRA_TOL) -> np.ndarray:
    """Inverse square root of a 2x2 Hermitian positive-definite matrix.

    Closed form: for PD ``a`` with ``s = sqrt(det a)`` and ``t = sqrt(tr a + 2 s)``,
    ``sqrt(a) = (a + s I) / t``; the 2x2 inverse of that is taken explicitly.
    """
    a = as_matrix(a)
    if a.shape != (2, 2):
        raise ValueError(f"hermitian_sqrt_inv is 2x2 only, got {a.shape}")
    if max_abs(a - a.conj().T) > tol * max(1.0, max_abs(a)):
        raise ValueError("matrix is not Hermitian")
    tr = float(a[0, 0].real + a[1, 1].real)
    det = float((a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]).real)
    disc = max(tr * tr - 4.0 * det, 0.0)
    lam_min = 0.5 * (tr - np.sqrt(disc))
    if lam_min < tol:
        raise ValueError(f"matrix is not positive definite (min eigenvalue {lam_min:.3e})")
    s = np.sqrt(det)
    t = np.sqrt(tr + 2.0 * s)
    root = (a + s * I2) / t
    # inverse of [[p, q], [r, u]] is [[u, -q], [-r, p]] / det; det(root) = s
    inv = np.array([[root[1, 1], -root[0, 1]], [-root[1, 0], root[0, 0]]]) / s
    return 0.5 * (inv + inv.conj().T)
