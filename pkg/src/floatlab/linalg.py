"""Dense linear-algebra kernels used across the package.

Thin, contract-checked wrappers around LAPACK (via numpy/scipy) for the
factorization-style kernels, plus a Newton iteration with determinant
scaling for the matrix sign function, which has no library equivalent
here.  All kernels are double precision and deterministic for a fixed
input on a fixed build.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla

from .errors import ImaginaryAxisEigenvalue, NoConvergence, SingularMatrix

#: On-disk dense matrix format: magic, uint32 rows, uint32 cols, 4 pad bytes,
#: then row-major little-endian float64 payload.
MATRIX_MAGIC = b"FLTC"
_HEADER_BYTES = 16


def lu_solve(a, b):
    """Solve a x = b by LU with partial pivoting.

    Raises SingularMatrix when the factorization hits an exactly zero
    pivot (or LAPACK reports singularity).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(a)
    except (ValueError, sla.LinAlgError) as exc:
        raise SingularMatrix(str(exc)) from exc
    if np.any(np.diag(lu) == 0):
        raise SingularMatrix("zero pivot in LU factorization")
    return sla.lu_solve((lu, piv), b)


def eigenvalues(a):
    """All eigenvalues of a square matrix (Hessenberg + shifted QR).

    The returned values satisfy sum(eigenvalues) == trace to roughly
    1e-8 relative; failure of the underlying QR iteration raises
    NoConvergence.
    """
    a = np.asarray(a)
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc


def schur_real(a):
    """Real Schur decomposition a = Q T Q^T with quasi-triangular T.

    Returns (Q, T).
    """
    a = np.asarray(a, dtype=float)
    try:
        t, q = sla.schur(a, output="real")
    except sla.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return q, t


def sym_eigen(s):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    s = np.asarray(s, dtype=float)
    try:
        return np.linalg.eigh(s)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc


def matrix_sign(h, max_iter=100, tol=1e-13):
    """Matrix sign function by scaled Newton iteration Z <- (c Z + (c Z)^-1)/2.

    Determinant scaling c = |det Z|^(-1/n) accelerates the early phase.
    The iteration is undefined when h has an eigenvalue on the imaginary
    axis; that surfaces as a singular iterate or a stalled residual and
    raises ImaginaryAxisEigenvalue / NoConvergence.
    """
    z = np.asarray(h, dtype=float).copy()
    n = z.shape[0]
    if z.shape != (n, n):
        raise ValueError("matrix_sign expects a square matrix")
    for k in range(max_iter):
        try:
            zinv = np.linalg.inv(z)
        except np.linalg.LinAlgError as exc:
            raise ImaginaryAxisEigenvalue(
                "sign iteration hit a singular iterate; eigenvalue on the imaginary axis"
            ) from exc
        # determinant scaling, computed from the already-factored inverse path
        sign_det, logabsdet = np.linalg.slogdet(z)
        if sign_det == 0 or not np.isfinite(logabsdet):
            raise ImaginaryAxisEigenvalue("sign iteration determinant vanished")
        c = np.exp(-logabsdet / n)
        z_next = 0.5 * (c * z + zinv / c)
        delta = np.linalg.norm(z_next - z, "fro") / max(np.linalg.norm(z_next, "fro"), 1e-300)
        z = z_next
        if delta < tol:
            return z
    raise NoConvergence(f"sign iteration did not converge in {max_iter} steps")


def save_matrix(path, a):
    """Write a dense real matrix in the package binary format."""
    a = np.ascontiguousarray(a, dtype="<f8")
    if a.ndim == 1:
        a = a[None, :]
    rows, cols = a.shape
    header = MATRIX_MAGIC + np.array([rows, cols], dtype="<u4").tobytes() + b"\0" * 4
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(a.tobytes())


def save_matrix_csv(path, a):
    """Write a dense real matrix as plain CSV, for inspection."""
    np.savetxt(path, np.atleast_2d(np.asarray(a, dtype=float)), delimiter=",")


def load_matrix(path):
    """Read a dense real matrix written by :func:`save_matrix`."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER_BYTES)
        if len(header) != _HEADER_BYTES or header[:4] != MATRIX_MAGIC:
            raise ValueError(f"{path} is not a floatlab matrix file")
        rows, cols = np.frombuffer(header[4:12], dtype="<u4")
        data = np.frombuffer(fh.read(int(rows) * int(cols) * 8), dtype="<f8")
    return data.reshape(int(rows), int(cols)).copy()
