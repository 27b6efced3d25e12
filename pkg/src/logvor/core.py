"""Symmetric-matrix primitives and the Gaussian log-likelihood.

Covariance-like objects are plain float ndarrays of shape ``(m, m)``,
symmetric with finite entries.  Matrix and vertex indices in the public
API are 1-based, matching the JSON serializer.  Only the covariance part
of the Gaussian likelihood is modelled; the mean is profiled out, and
the likelihood is normalised so that

    log_likelihood(Sigma, S) = -log det(Sigma) - tr(S Sigma^{-1}).

All functions are pure and never mutate their arguments.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import IndexOutOfRange, NotPD, ShapeMismatch

#: Pivot tolerance of the positive-definiteness test, relative to the
#: largest diagonal entry.
PD_PIVOT_RTOL = 1e-12


def check_symmetric(M, *, rtol: float = 1e-8) -> np.ndarray:
    """Validate and return a square, finite, symmetric float matrix.

    Asymmetries up to ``rtol`` times the largest entry are averaged
    away; anything larger raises :class:`ShapeMismatch`.
    """
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] == 0:
        raise ShapeMismatch("matrix must have positive dimension")
    if not np.all(np.isfinite(A)):
        raise ShapeMismatch("matrix entries must be finite")
    scale = max(1.0, float(np.abs(A).max()))
    if float(np.abs(A - A.T).max()) > rtol * scale:
        raise ShapeMismatch("matrix is not symmetric")
    return (A + A.T) / 2.0


def is_positive_definite(M) -> bool:
    """Strict positive definiteness via symmetric elimination.

    Runs an in-place Cholesky-style elimination and returns ``False`` as
    soon as a pivot drops to or below ``PD_PIVOT_RTOL`` times the
    largest diagonal entry of the input.  Semidefinite boundary matrices
    are therefore classified as not positive definite.
    """
    A = check_symmetric(M)
    m = A.shape[0]
    dmax = float(np.max(np.diag(A)))
    if dmax <= 0.0:
        return False
    thresh = PD_PIVOT_RTOL * dmax
    for k in range(m):
        piv = A[k, k]
        if piv <= thresh:
            return False
        v = A[k + 1:, k]
        A[k + 1:, k + 1:] -= np.outer(v, v) / piv
    return True


def log_likelihood(Sigma, S) -> float:
    """Normalised Gaussian log-likelihood ``-log det(Sigma) - tr(S Sigma^{-1})``.

    Both arguments must be positive definite matrices of the same size.
    """
    Sg = check_symmetric(Sigma)
    Ss = check_symmetric(S)
    if Sg.shape != Ss.shape:
        raise ShapeMismatch(
            f"Sigma has shape {Sg.shape} but S has shape {Ss.shape}")
    if not is_positive_definite(Sg):
        raise NotPD("Sigma is not positive definite")
    if not is_positive_definite(Ss):
        raise NotPD("S is not positive definite")
    L = np.linalg.cholesky(Sg)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -logdet - float(np.trace(np.linalg.solve(Sg, Ss)))


def score_matrix(Sigma, S) -> np.ndarray:
    """Gradient of the log-likelihood in Sigma under the trace pairing.

    Returns ``Sigma^{-1} S Sigma^{-1} - Sigma^{-1}``; the directional
    derivative of :func:`log_likelihood` along a symmetric direction
    ``D`` is ``tr(score_matrix(Sigma, S) @ D)``.  ``Sigma`` must be
    positive definite; ``S`` only has to be symmetric.
    """
    Sg = check_symmetric(Sigma)
    Ss = check_symmetric(S)
    if Sg.shape != Ss.shape:
        raise ShapeMismatch(
            f"Sigma has shape {Sg.shape} but S has shape {Ss.shape}")
    if not is_positive_definite(Sg):
        raise NotPD("Sigma is not positive definite")
    K = np.linalg.inv(Sg)
    G = K @ Ss @ K - K
    return (G + G.T) / 2.0


def _as_index(I: Iterable[int], m: int) -> list[int]:
    """1-based index collection -> validated 0-based list, order preserved.

    Unordered collections (set/frozenset) are sorted ascending.
    """
    if isinstance(I, (set, frozenset)):
        idx = sorted(I)
    else:
        idx = list(I)
    out = []
    for i in idx:
        j = int(i)
        if j != i or not 1 <= j <= m:
            raise IndexOutOfRange(f"index {i!r} outside 1..{m}")
        out.append(j - 1)
    if len(set(out)) != len(out):
        raise IndexOutOfRange("duplicate index in index set")
    if not out:
        raise IndexOutOfRange("empty index set")
    return out


def embed(B, rows: Iterable[int], cols: Iterable[int], m: int) -> np.ndarray:
    """Place the block ``B`` at positions ``rows x cols`` of an m x m zero matrix.

    Indices are 1-based.  The placement is not symmetrised: callers who
    need a symmetric result must supply a symmetric placement (e.g.
    ``rows == cols`` with symmetric ``B``, or add the transposed
    placement themselves).
    """
    A = np.asarray(B, dtype=float)
    if A.ndim != 2:
        raise ShapeMismatch(f"block must be 2-d, got shape {A.shape}")
    r = _as_index(rows, m)
    c = _as_index(cols, m)
    if A.shape != (len(r), len(c)):
        raise ShapeMismatch(
            f"block shape {A.shape} does not match index sets "
            f"({len(r)}, {len(c)})")
    out = np.zeros((m, m))
    out[np.ix_(r, c)] = A
    return out


def principal_submatrix(M, I: Iterable[int]) -> np.ndarray:
    """Submatrix of ``M`` with rows and columns ``I`` (1-based, order preserved)."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {A.shape}")
    idx = _as_index(I, A.shape[0])
    return A[np.ix_(idx, idx)].copy()


def _parse_entry(x) -> float:
    """JSON matrix entry -> float.

    Numbers pass through; strings may be exact decimals ("0.25") or
    rationals ("1211/4560") and are parsed to the nearest double.
    """
    if isinstance(x, bool):
        raise ShapeMismatch("matrix entries must be numbers or numeric strings")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(Fraction(x))
        except (ValueError, ZeroDivisionError) as exc:
            raise ShapeMismatch(f"cannot parse matrix entry {x!r}") from exc
    raise ShapeMismatch(f"cannot parse matrix entry {x!r}")


def sym_from_json(obj) -> np.ndarray:
    """Decode ``{"dim": m, "upper": [...]}`` into a symmetric matrix.

    ``upper`` lists the upper triangle (diagonal included) row-major.
    """
    if not isinstance(obj, dict) or "dim" not in obj or "upper" not in obj:
        raise ShapeMismatch('symmetric matrix JSON needs "dim" and "upper"')
    m = obj["dim"]
    if not isinstance(m, int) or m < 1:
        raise ShapeMismatch(f'"dim" must be a positive integer, got {m!r}')
    upper = obj["upper"]
    if len(upper) != m * (m + 1) // 2:
        raise ShapeMismatch(
            f'"upper" must have {m * (m + 1) // 2} entries for dim {m}, '
            f"got {len(upper)}")
    A = np.zeros((m, m))
    pos = 0
    for i in range(m):
        for j in range(i, m):
            A[i, j] = A[j, i] = _parse_entry(upper[pos])
            pos += 1
    return check_symmetric(A)


def sym_to_json(M) -> dict:
    """Encode a symmetric matrix as ``{"dim": m, "upper": [...]}``."""
    A = check_symmetric(M)
    m = A.shape[0]
    upper = [float(A[i, j]) for i in range(m) for j in range(i, m)]
    return {"dim": m, "upper": upper}


def random_pd(m: int, rng: np.random.Generator, *, scale: float = 1.0) -> np.ndarray:
    """Random positive definite matrix (uniform symmetric part shifted PD)."""
    A = rng.uniform(-1.0, 1.0, size=(m, m)) * scale
    A = (A + A.T) / 2.0
    lam = float(np.linalg.eigvalsh(A)[0])
    return A + (abs(lam) + 0.5 * scale) * np.eye(m)
