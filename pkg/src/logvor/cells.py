"""Log-normal spectrahedra and logarithmic Voronoi cells.

For a model point ``Sigma``, the log-normal matrix space is the affine
set of symmetric ``S`` whose score at ``Sigma`` is trace-orthogonal to
the model's tangent space; intersecting with the positive definite cone
gives the log-normal spectrahedron.  The logarithmic Voronoi cell of
``Sigma`` is the convex subset of samples whose maximum likelihood
estimate is ``Sigma``.  The two sets coincide for linear concentration
and DAG models; for the closed-form families here the cell is cut out
of the spectrahedron by explicit inequalities, and for unrestricted
correlation matrices membership is decided against the multistart
critical points (best effort).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import check_symmetric, embed, is_positive_definite, \
    log_likelihood, principal_submatrix
from .errors import NotOnSlice, NotPD, OutOfRange, PreconditionFailed, \
    SamplingExhausted, ShapeMismatch
from .graphs import Graph, find_reducible_decomposition, induced_subgraph
from .mle import SolverOptions, CriticalPoint, critical_points, \
    criticality_residual, cubic_roots_in_interval, equicorrelation_cubic
from .models import DagModel, GraphModel, LinearConcentration, \
    UnrestrictedCorrelation, equicorrelation_matrix, tangent_basis

IN_CELL = "InCell"
IN_SPECTRAHEDRON_NOT_CELL = "InSpectrahedronNotCell"
NOT_IN_SPECTRAHEDRON = "NotInSpectrahedron"
NOT_PD = "NotPD"

#: Families whose cells fill the whole spectrahedron (unique maximiser).
DEGREE_ONE_FAMILIES = (LinearConcentration, GraphModel, DagModel)


@dataclass(frozen=True, eq=False)
class AffineSlice:
    """Affine subspace ``base + span(directions)`` of symmetric matrices.

    Directions are orthonormal in the trace inner product.
    """

    base: np.ndarray
    directions: tuple[np.ndarray, ...]

    @property
    def dimension(self) -> int:
        return len(self.directions)


@dataclass(frozen=True, eq=False)
class MembershipVerdict:
    """Outcome of a cell membership query.

    ``margin`` is the log-likelihood gap to the best competing critical
    point (``None`` when no competitor exists or the query failed
    earlier); ``witness`` is the strictly better competitor for
    ``InSpectrahedronNotCell`` verdicts.  ``best_effort`` marks
    verdicts whose critical points come from the heuristic multistart
    search.
    """

    status: str
    witness: Optional[CriticalPoint] = None
    margin: Optional[float] = None
    best_effort: bool = False


def _sym_coords(m: int):
    """Orthonormal coordinates of Sym(m) under the trace inner product."""
    iu = np.triu_indices(m, 1)
    sqrt2 = np.sqrt(2.0)

    def vec(M):
        return np.concatenate([np.diag(M), sqrt2 * M[iu]])

    def unvec(v):
        M = np.zeros((m, m))
        M[np.diag_indices(m)] = v[:m]
        M[iu] = v[m:] / sqrt2
        M[(iu[1], iu[0])] = v[m:] / sqrt2
        return M

    return vec, unvec


def lognormal_basis(model, Sigma) -> AffineSlice:
    """The log-normal matrix space of the model at ``Sigma``.

    Solves the linear system ``tr(K D K T_k) = 0`` over symmetric
    directions ``D`` (with ``K = Sigma^{-1}`` and ``T_k`` the tangent
    basis) and returns ``Sigma`` plus an orthonormal basis of the
    solution space.
    """
    A = check_symmetric(Sigma)
    if not is_positive_definite(A):
        raise NotPD("Sigma is not positive definite")
    tangent = tangent_basis(model, A)
    K = np.linalg.inv(A)
    m = A.shape[0]
    vec, unvec = _sym_coords(m)
    rows = np.stack([vec(K @ T @ K) for T in tangent])
    _, svals, vh = np.linalg.svd(rows)
    cutoff = max(rows.shape) * np.finfo(float).eps * (svals[0] if svals.size else 0.0)
    rank = int(np.sum(svals > cutoff))
    directions = tuple(unvec(row) for row in vh[rank:])
    return AffineSlice(base=A, directions=directions)


def in_spectrahedron(model, Sigma, S, tol: float = 1e-8) -> bool:
    """Is ``S`` in the log-normal spectrahedron of the model at ``Sigma``?

    True when ``S`` is positive definite and the score of ``S`` at
    ``Sigma`` is trace-orthogonal to the tangent space within ``tol``
    (largest normalised component).
    """
    Ss = check_symmetric(S)
    if not is_positive_definite(Ss):
        return False
    return criticality_residual(model, Sigma, Ss) < tol


def cell_membership(model, Sigma, S, opts: Optional[SolverOptions] = None, *,
                    tol: float = 1e-8, tie_tol: float = 1e-9
                    ) -> MembershipVerdict:
    """Decide whether ``S`` lies in the logarithmic Voronoi cell of ``Sigma``.

    The sample is first tested for positive definiteness and
    spectrahedron membership (at criticality tolerance ``tol``).  For
    the unique-maximiser families the cell equals the spectrahedron and
    the verdict is immediate.  Otherwise all critical points of ``S``
    on the model are enumerated and the log-likelihood of ``Sigma`` is
    compared against the best competitor; ties within ``tie_tol`` count
    as membership.  ``Sigma`` must be a nonsingular model point.
    """
    Sg = check_symmetric(Sigma)
    Ss = check_symmetric(S)
    if not is_positive_definite(Ss):
        return MembershipVerdict(status=NOT_PD)
    if not in_spectrahedron(model, Sg, Ss, tol):
        return MembershipVerdict(status=NOT_IN_SPECTRAHEDRON)
    if isinstance(model, DEGREE_ONE_FAMILIES):
        return MembershipVerdict(status=IN_CELL)

    best_effort = isinstance(model, UnrestrictedCorrelation)
    points = critical_points(model, Ss, opts)
    base_ll = log_likelihood(Sg, Ss)
    others = [cp for cp in points
              if float(np.abs(cp.sigma - Sg).max()) > 1e-6]
    if not others:
        return MembershipVerdict(status=IN_CELL, best_effort=best_effort)
    best = others[0]          # points are sorted by descending log-likelihood
    margin = base_ll - best.loglik
    if margin >= -tie_tol:
        return MembershipVerdict(status=IN_CELL, margin=margin,
                                 best_effort=best_effort)
    return MembershipVerdict(status=IN_SPECTRAHEDRON_NOT_CELL, witness=best,
                             margin=margin, best_effort=best_effort)


def _slice_mismatch(value: float, expect: float, tol: float) -> bool:
    return abs(value - expect) > tol * (1.0 + abs(expect))


def bivariate_cell(c: float, S, *, slice_tol: float = 1e-8) -> bool:
    """Closed-form cell membership for the 2 x 2 correlation family.

    ``S`` must be positive definite and lie on the log-normal slice of
    the correlation matrix with off-diagonal ``c`` (both checked; the
    slice ties the half-trace ``a`` to ``b = S_12``).  On the slice the
    cell is decided by the sign of ``b`` alone -- ``b >= 0`` for
    ``c > 0``, ``b <= 0`` for ``c < 0`` -- and by ``a >= 1/2`` for the
    diagonal point ``c = 0``.
    """
    c = float(c)
    if not -1.0 < c < 1.0:
        raise OutOfRange(f"{c} outside the open interval (-1, 1)")
    A = check_symmetric(S)
    if A.shape != (2, 2):
        raise ShapeMismatch(f"expected a 2 x 2 matrix, got {A.shape}")
    if not is_positive_definite(A):
        raise NotOnSlice("S is not positive definite")
    a = float((A[0, 0] + A[1, 1]) / 2.0)
    b = float(A[0, 1])
    if c == 0.0:
        if abs(b) > slice_tol * (1.0 + a):
            raise NotOnSlice("slice of the diagonal point needs S_12 = 0")
        return a >= 0.5
    a_expect = (b * c * c - c ** 3 + b + c) / (2.0 * c)
    if _slice_mismatch(a, a_expect, slice_tol):
        raise NotOnSlice(
            f"half-trace {a} is off the slice value {a_expect}")
    return b >= 0.0 if c > 0.0 else b <= 0.0


def symmetrize(S) -> tuple[float, float, np.ndarray]:
    """Average over simultaneous row/column permutations.

    Returns the mean diagonal value ``a``, the mean off-diagonal value
    ``b`` and the averaged matrix ``a I + b (J - I)``, which is what a
    full average over the symmetric group produces.
    """
    A = check_symmetric(S)
    m = A.shape[0]
    a = float(np.trace(A)) / m
    if m == 1:
        b = 0.0
    else:
        iu = np.triu_indices(m, 1)
        b = float(A[iu].mean())
    Sbar = a * np.eye(m) + b * (np.ones((m, m)) - np.eye(m))
    return a, b, Sbar


def equicorrelation_cell(m: int, c: float, S, *,
                         slice_tol: float = 1e-8) -> bool:
    """Cell membership for the equicorrelation family.

    The symmetrised statistics ``(a, b)`` of ``S`` must satisfy the
    slice relation of the value ``c`` (checked; :class:`NotOnSlice`
    otherwise).  Membership then reduces to comparing log-likelihoods
    over the real roots of the critical cubic; ``S`` itself must also
    be positive definite.  For ``m = 2`` this reproduces
    :func:`bivariate_cell`.
    """
    if int(m) != m or m < 2:
        raise ShapeMismatch("equicorrelation cell needs m >= 2")
    c = float(c)
    lo = -1.0 / (m - 1)
    if not lo < c < 1.0:
        raise OutOfRange(f"{c} outside the positive definite interval ({lo}, 1)")
    A = check_symmetric(S)
    if A.shape[0] != m:
        raise ShapeMismatch(
            f"expected a {m} x {m} matrix, got {A.shape}")
    a, b, Sbar = symmetrize(A)
    if c == 0.0:
        if abs(b) > slice_tol * (1.0 + abs(a)):
            raise NotOnSlice("slice of the identity point needs mean "
                             "off-diagonal zero")
        return is_positive_definite(A) and a >= 0.5
    denom = c * c * m - 2.0 * c * c + 2.0 * c
    a_expect = ((m - 2) * c * c + (m - 1) * b * c * c
                - (m - 1) * c ** 3 + b + c) / denom
    if _slice_mismatch(a, a_expect, slice_tol):
        raise NotOnSlice(
            f"symmetrised half-trace {a} is off the slice value {a_expect}")
    if not is_positive_definite(A):
        return False
    roots = cubic_roots_in_interval(*equicorrelation_cubic(m, a, b), lo, 1.0)
    ll_c = log_likelihood(equicorrelation_matrix(m, c), Sbar)
    best = max(log_likelihood(equicorrelation_matrix(m, r), Sbar)
               for r in roots)
    return ll_c >= best - 1e-9


def ci_union_cell(Sigma, S, *, slice_tol: float = 1e-8) -> bool:
    """Closed-form cell membership for the union of two CI planes.

    At a nonsingular model point the slice frees exactly two entries of
    ``S`` and the cell is a strip inside the spectrahedron ellipse:
    with component-one data ``(t1, t2, t3, t4)`` the condition is
    ``S positive definite and |S_12| <= |t3| sqrt(t1 / t4)``; the
    component-two rule mirrors it with ``|S_23| <= |s2| sqrt(s4 / s1)``.
    At a singular (diagonal) point the three off-diagonal entries of
    ``S`` are free, and membership asks that ``S`` be positive definite
    along with the two matrices obtained by zeroing ``S_23``
    respectively ``S_12``.
    """
    Sg = check_symmetric(Sigma)
    Ss = check_symmetric(S)
    if Sg.shape != (3, 3) or Ss.shape != (3, 3):
        raise ShapeMismatch("the union model lives on 3 x 3 matrices")
    if not is_positive_definite(Sg):
        raise NotPD("Sigma is not positive definite")
    scale = max(1.0, float(np.abs(Sg).max()))
    s12, s13, s23 = Sg[0, 1], Sg[0, 2], Sg[1, 2]
    if abs(s13) > slice_tol * scale:
        raise NotOnSlice("Sigma is not a union-model point (Sigma_13 != 0)")

    def pinned(pairs) -> None:
        for (i, j) in pairs:
            if abs(Ss[i, j] - Sg[i, j]) > slice_tol * scale:
                raise NotOnSlice(
                    f"S[{i + 1},{j + 1}] is not pinned to Sigma on the slice")

    if abs(s12) <= slice_tol * scale and abs(s23) <= slice_tol * scale:
        # singular (diagonal) point: x = S_12, y = S_13, z = S_23 free.
        # The pair of conditions does not imply that S itself is positive
        # definite (e.g. x = z = 0.9, y = 0 on the identity), so the
        # ambient condition is checked separately.
        pinned([(0, 0), (1, 1), (2, 2)])
        x, y, z = Ss[0, 1], Ss[0, 2], Ss[1, 2]
        d1, d2, d3 = Sg[0, 0], Sg[1, 1], Sg[2, 2]
        M1 = np.array([[d1, x, y], [x, d2, 0.0], [y, 0.0, d3]])
        M2 = np.array([[d1, 0.0, y], [0.0, d2, z], [y, z, d3]])
        return (is_positive_definite(Ss) and is_positive_definite(M1)
                and is_positive_definite(M2))

    if abs(s12) <= slice_tol * scale:
        # component one: free entries S_12, S_13
        pinned([(0, 0), (1, 1), (1, 2), (2, 2)])
        bound = abs(s23) * np.sqrt(Sg[0, 0] / Sg[2, 2])
        return is_positive_definite(Ss) and abs(Ss[0, 1]) <= bound

    if abs(s23) <= slice_tol * scale:
        # component two: free entries S_13, S_23
        pinned([(0, 0), (0, 1), (1, 1), (2, 2)])
        bound = abs(s12) * np.sqrt(Sg[2, 2] / Sg[0, 0])
        return is_positive_definite(Ss) and abs(Ss[1, 2]) <= bound

    raise NotOnSlice("Sigma is not a union-model point")


def compose_cell(G: Graph, Sigma, S1, S2, M) -> np.ndarray:
    """Assemble a cell member of a reducible graph model from its pieces.

    Given the separator decomposition ``(U, T, W)`` of ``G``, cell
    members ``S1`` (for the U side at ``Sigma_UU``) and ``S2`` (for the
    W side at ``Sigma_WW``), and a symmetric ``M`` vanishing on the
    ``U x U`` and ``W x W`` blocks, returns
    ``inv([inv(S1)] + [inv(S2)] - [inv(Sigma_TT)]) + M``.  Invalid
    pieces raise :class:`PreconditionFailed`; a result outside the
    positive definite cone raises :class:`NotPD`.
    """
    Sg = check_symmetric(Sigma)
    m = G.m
    if Sg.shape[0] != m:
        raise ShapeMismatch(
            f"graph has {m} vertices, Sigma has dimension {Sg.shape[0]}")
    dec = find_reducible_decomposition(G)
    if dec is None:
        raise PreconditionFailed("graph admits no clique-separator decomposition")
    U, T, W = dec.U, dec.T, dec.W

    A1 = check_symmetric(S1)
    A2 = check_symmetric(S2)
    Mk = check_symmetric(M)
    if A1.shape[0] != len(U) or A2.shape[0] != len(W) or Mk.shape[0] != m:
        raise ShapeMismatch("piece dimensions do not match the decomposition")

    v1 = cell_membership(GraphModel(induced_subgraph(G, U)),
                         principal_submatrix(Sg, U), A1)
    if v1.status != IN_CELL:
        raise PreconditionFailed(f"S1 is not in the U-side cell ({v1.status})")
    v2 = cell_membership(GraphModel(induced_subgraph(G, W)),
                         principal_submatrix(Sg, W), A2)
    if v2.status != IN_CELL:
        raise PreconditionFailed(f"S2 is not in the W-side cell ({v2.status})")
    scale = max(1.0, float(np.abs(Mk).max()))
    for block in (U, W):
        if float(np.abs(principal_submatrix(Mk, block)).max()) > 1e-12 * scale:
            raise PreconditionFailed(
                "M must vanish on the U x U and W x W blocks")

    L = embed(np.linalg.inv(A1), U, U, m) + embed(np.linalg.inv(A2), W, W, m)
    if T:
        L -= embed(np.linalg.inv(principal_submatrix(Sg, T)), T, T, m)
    if not is_positive_definite(L):
        raise NotPD("glued concentration is not positive definite")
    S = np.linalg.inv(L)
    S = (S + S.T) / 2.0 + Mk
    if not is_positive_definite(S):
        raise NotPD("composed sample is not positive definite")
    return S


def project_cell(G: Graph, Sigma, S) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a cell member of a reducible graph model into its pieces.

    Returns ``(S_UU, S_WW, M)`` where ``M`` is the off-block remainder
    ``S - inv([inv(S_UU)] + [inv(S_WW)] - [inv(Sigma_TT)])``;
    :func:`compose_cell` reassembles ``S`` from the triple.  ``S`` must
    be in the cell of ``Sigma``.
    """
    Sg = check_symmetric(Sigma)
    Ss = check_symmetric(S)
    m = G.m
    if Sg.shape[0] != m or Ss.shape[0] != m:
        raise ShapeMismatch("dimension mismatch with the graph")
    dec = find_reducible_decomposition(G)
    if dec is None:
        raise PreconditionFailed("graph admits no clique-separator decomposition")
    verdict = cell_membership(GraphModel(G), Sg, Ss)
    if verdict.status != IN_CELL:
        raise PreconditionFailed(
            f"S is not in the cell of Sigma ({verdict.status})")
    U, T, W = dec.U, dec.T, dec.W
    A1 = principal_submatrix(Ss, U)
    A2 = principal_submatrix(Ss, W)
    L = embed(np.linalg.inv(A1), U, U, m) + embed(np.linalg.inv(A2), W, W, m)
    if T:
        L -= embed(np.linalg.inv(principal_submatrix(Sg, T)), T, T, m)
    core = np.linalg.inv(L)
    M = Ss - (core + core.T) / 2.0
    return A1, A2, M


def sample_spectrahedron(model, Sigma, count: int, seed: int = 0,
                         radius: Optional[float] = None) -> list[np.ndarray]:
    """Draw positive definite samples from the log-normal spectrahedron.

    Proposals are Gaussian steps along the slice directions with the
    given ``radius`` (default: half the smallest eigenvalue of
    ``Sigma``); a rejected (non-PD) proposal halves the radius for that
    sample and redraws.  Deterministic for a fixed seed.
    """
    if count < 0:
        raise OutOfRange("count must be nonnegative")
    slice_ = lognormal_basis(model, Sigma)
    base = slice_.base
    if radius is None:
        radius = 0.5 * float(np.linalg.eigvalsh(base)[0])
    if radius <= 0:
        raise OutOfRange("radius must be positive")
    rng = np.random.default_rng(seed)
    dirs = slice_.directions
    out: list[np.ndarray] = []
    for _ in range(count):
        r = float(radius)
        for _ in range(200):
            S = base.copy()
            if dirs:
                coeff = rng.standard_normal(len(dirs)) * r
                for c, D in zip(coeff, dirs):
                    S = S + c * D
            if is_positive_definite(S):
                out.append(S)
                break
            r *= 0.5
        else:
            raise SamplingExhausted(
                "proposal radius underflowed before finding a PD sample")
    return out


def verdict_to_json(v: MembershipVerdict) -> dict:
    """Encode a membership verdict (status, margin, optional witness)."""
    from .core import sym_to_json

    out: dict = {"status": v.status,
                 "margin": None if v.margin is None else float(v.margin)}
    if v.witness is not None:
        out["witness"] = {"point": sym_to_json(v.witness.sigma),
                          "loglik": float(v.witness.loglik)}
    else:
        out["witness"] = None
    if v.best_effort:
        out["best_effort"] = True
    return out
