"""Finite-dimensional multiplication-operator analysis.

On a finite index set with counting measure the multiplication operators are
exactly the diagonal matrices.  This module decides that property through
three independent predicates (which must agree), extracts a witness when it
fails, and provides the diagonal projection with its trace duality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def default_mult_tol(Q):
    return 1e-9 * (1.0 + float(np.max(np.abs(Q), initial=0.0)))


def _offdiag_abs_max(Q):
    A = np.abs(np.asarray(Q))
    if A.shape[0] == 1:
        return 0.0
    return float(np.max(A - np.diag(np.diag(A))))


def _predicate_offdiagonal(Q, tol):
    """Disjoint supports stay disjoint: every off-diagonal entry is small."""
    return _offdiag_abs_max(Q) <= tol


def _predicate_commutation(Q, tol):
    """Q commutes with every coordinate indicator projection."""
    Q = np.asarray(Q)
    m = Q.shape[0]
    worst = 0.0
    for n in range(m):
        E = np.zeros((m, m))
        E[n, n] = 1.0
        worst = max(worst, float(np.max(np.abs(E @ Q - Q @ E))))
    return worst <= tol


def _predicate_domination(Q, tol):
    """|Q f| <= c |f| on the standard basis vectors."""
    Q = np.asarray(Q)
    m = Q.shape[0]
    worst = 0.0
    for j in range(m):
        col = np.abs(Q[:, j])
        mask = np.ones(m, dtype=bool)
        mask[j] = False
        if m > 1:
            worst = max(worst, float(col[mask].max()))
    return worst <= tol


def is_multiplication(Q, tol=None):
    """True iff Q is (to tolerance) a multiplication operator, i.e. diagonal.

    Cross-checked through the off-diagonal, commutation, and domination
    predicates; disagreement would indicate a broken implementation.
    """
    Q = np.asarray(Q, dtype=complex)
    if tol is None:
        tol = default_mult_tol(Q)
    answers = (
        _predicate_offdiagonal(Q, tol),
        _predicate_commutation(Q, tol),
        _predicate_domination(Q, tol),
    )
    if len(set(answers)) != 1:
        raise AssertionError(f"multiplication predicates disagree: {answers}")
    return answers[0]


@dataclass(frozen=True)
class MultWitness:
    """Certificate that Q is not a multiplication operator.

    ``f`` is a nonnegative real vector vanishing on the index set ``B`` and
    the pairing (Q f, 1_B) is nonzero.
    """

    f: np.ndarray
    B: tuple
    pairing: complex

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        if np.any(f < 0):
            raise ValueError("witness vector must be nonnegative")
        if any(f[i] != 0 for i in self.B):
            raise ValueError("witness vector must vanish on B")
        if self.pairing == 0:
            raise ValueError("witness pairing must be nonzero")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "B", tuple(int(i) for i in self.B))


def find_witness(Q, tol=None):
    """First off-diagonal entry above tolerance, scanned in row-major order.

    Returns ``MultWitness(f=e_j, B={i}, pairing=Q[i, j])`` or None when Q is
    a multiplication operator to the given tolerance.
    """
    Q = np.asarray(Q, dtype=complex)
    if tol is None:
        tol = default_mult_tol(Q)
    m = Q.shape[0]
    for i in range(m):
        for j in range(m):
            if i != j and abs(Q[i, j]) > tol:
                f = np.zeros(m)
                f[j] = 1.0
                return MultWitness(f, (i,), complex(Q[i, j]))
    return None


def diag_projection(Q):
    """Diagonal part of Q: idempotent, trace preserving, norm contractive."""
    Q = np.asarray(Q, dtype=complex)
    return np.diag(np.diag(Q))


def trace_duality_residual(S, T):
    """|Tr(S P(T)) - Tr(P(S) T)|; both sides equal sum_n S_nn T_nn."""
    S = np.asarray(S, dtype=complex)
    T = np.asarray(T, dtype=complex)
    if S.shape != T.shape:
        raise ValueError("operator shapes differ")
    lhs = np.trace(S @ diag_projection(T))
    rhs = np.trace(diag_projection(S) @ T)
    return float(abs(lhs - rhs))


def lift_is_diagonal(field, cells, tol=None):
    """Discrete product-space lift: the induced operator on the product space
    is a multiplication operator iff C(x) is one at (almost) every point;
    checked here at every cell center."""
    centers = cells.cell_centers() if hasattr(cells, "cell_centers") else np.atleast_2d(cells)
    for x in centers:
        Q = field.eval(np.asarray(x, dtype=float))
        if not is_multiplication(Q, tol):
            return False
    return True
