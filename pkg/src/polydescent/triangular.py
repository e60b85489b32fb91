"""Triangular polynomial systems and the split into retained/eliminated blocks.

A triangular system has pairwise-distinct main variables and no constant
members; variables are *algebraic* when they are some member's main variable
and *free* otherwise.  The partition machinery peels off a suffix of the
constraints so that each eliminated variable can later be recovered by a
one-dimensional solve, leaving a lower-dimensional system over the retained
variables for the optimizer to walk on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .polynomials import Polynomial, VariableOrder


class ConstantMemberError(ValueError):
    """A would-be triangular system contains a constant polynomial."""


class DuplicateMainVariableError(ValueError):
    """Two members share the same main variable."""

    def __init__(self, name: str):
        super().__init__(f"two members share the main variable '{name}'")
        self.name = name


class NotEliminableError(ValueError):
    """The requested elimination breaks the triangular cascade."""


class EmptyReducedSystemError(ValueError):
    """Every constraint was eliminated; nothing is left to optimize over."""


class RankDeficientError(ValueError):
    """A linear system lost full row rank during triangularization."""


AUTO = "auto"


@dataclass(frozen=True)
class TriangularSystem:
    """A validated triangular set, members sorted by ascending main variable."""

    polynomials: tuple[Polynomial, ...]
    order: VariableOrder
    algebraic_vars: frozenset[int]
    free_vars: frozenset[int]

    @property
    def n_constraints(self) -> int:
        return len(self.polynomials)

    @property
    def manifold_dim(self) -> int:
        return len(self.free_vars)


def validate_triangular(
    polys: Sequence[Polynomial], order: VariableOrder
) -> TriangularSystem:
    """Check the triangular-set conditions and classify the variables.

    Raises :class:`ConstantMemberError` if any member is constant (the zero
    polynomial included) and :class:`DuplicateMainVariableError` if two
    members share a main variable.
    """
    by_mvar: dict[int, Polynomial] = {}
    for p in polys:
        if p.order != order:
            raise ValueError("polynomial built over a different variable order")
        v = p.main_variable()
        if v is None:
            raise ConstantMemberError(f"constant member '{p}' is not allowed")
        if v in by_mvar:
            raise DuplicateMainVariableError(order[v])
        by_mvar[v] = p
    algebraic = frozenset(by_mvar)
    free = frozenset(range(len(order))) - algebraic
    sorted_polys = tuple(by_mvar[v] for v in sorted(by_mvar))
    return TriangularSystem(sorted_polys, order, algebraic, free)


@dataclass(eq=False)
class WhitneyPartition:
    """Constraints and variables split for reduced-dimension descent.

    ``g_star`` involves retained variables only and cuts out the reduced
    manifold; ``g_circ[j]`` has main variable ``eliminated[j]`` and involves
    eliminated variables no later than the j-th, so the eliminated block can
    be solved one variable at a time.
    """

    system: TriangularSystem
    eliminated: tuple[int, ...]
    retained: tuple[int, ...]
    g_star: tuple[Polynomial, ...]
    g_circ: tuple[Polynomial, ...]

    @property
    def order(self) -> VariableOrder:
        return self.system.order

    @property
    def reduced_dim(self) -> int:
        return len(self.retained)

    @property
    def manifold_dim(self) -> int:
        return self.reduced_dim - len(self.g_star)

    @property
    def retained_free(self) -> tuple[int, ...]:
        """The u-block: retained variables that are free in the system."""
        return tuple(v for v in self.retained if v in self.system.free_vars)

    @property
    def retained_algebraic(self) -> tuple[int, ...]:
        """The x-block: retained variables that are still constrained."""
        return tuple(v for v in self.retained if v in self.system.algebraic_vars)

    def retained_names(self) -> tuple[str, ...]:
        return tuple(self.order[v] for v in self.retained)


def _unique_real_root_guaranteed(p: Polynomial) -> bool:
    # degree-1, or odd degree with a constant leading coefficient, always has
    # exactly one real root varying continuously with the parameters
    initial, d, _, _, _ = p.decompose()
    if d == 1:
        return True
    return d % 2 == 1 and initial.is_constant


def whitney_partition(
    sys: TriangularSystem, eliminate: Sequence[int] | str = AUTO
) -> WhitneyPartition:
    """Split ``sys`` into retained constraints and an eliminated cascade.

    ``eliminate`` lists algebraic variable indices in the order their
    constraints will be solved during the lift.  With ``AUTO`` the
    greatest-ranked algebraic variables are peeled off while the reduced
    dimension stays above ``min(2m + 1, n_vars)`` and the candidate
    constraint is guaranteed a unique real root (degree one, or odd degree
    with constant leading coefficient).
    """
    by_mvar = {p.main_variable(): p for p in sys.polynomials}
    n = len(sys.order)
    m = sys.manifold_dim

    if isinstance(eliminate, str):
        if eliminate != AUTO:
            raise ValueError(f"unknown elimination mode '{eliminate}'")
        target = min(2 * m + 1, n)
        chosen: list[int] = []
        d = n
        for v in sorted(sys.algebraic_vars, reverse=True):
            if d <= target:
                break
            if not _unique_real_root_guaranteed(by_mvar[v]):
                break
            chosen.append(v)
            d -= 1
        eliminated = tuple(sorted(chosen))
    else:
        eliminated = tuple(eliminate)
        seen: set[int] = set()
        for v in eliminated:
            if not 0 <= v < n:
                raise ValueError(f"variable index {v} out of range")
            if v in seen:
                raise NotEliminableError(
                    f"variable '{sys.order[v]}' listed twice in eliminate"
                )
            seen.add(v)
            if v not in sys.algebraic_vars:
                raise NotEliminableError(
                    f"variable '{sys.order[v]}' is free; only algebraic "
                    "variables can be eliminated"
                )

    elim_set = set(eliminated)
    g_circ = tuple(by_mvar[v] for v in eliminated)
    g_star = tuple(
        p for p in sys.polynomials if p.main_variable() not in elim_set
    )
    if len(sys.polynomials) > 0 and not g_star:
        raise EmptyReducedSystemError(
            "all constraints eliminated; nothing left to descend on"
        )
    retained = tuple(v for v in range(n) if v not in elim_set)

    for p in g_star:
        bad = p.variables() & elim_set
        if bad:
            name = sys.order[min(bad)]
            raise NotEliminableError(
                f"retained constraint '{p}' still involves eliminated "
                f"variable '{name}'"
            )
    for j, p in enumerate(g_circ):
        later = p.variables() & set(eliminated[j + 1 :])
        if later:
            name = sys.order[min(later)]
            raise NotEliminableError(
                f"eliminated constraint '{p}' involves '{name}', which is "
                "solved later in the elimination order"
            )

    return WhitneyPartition(sys, eliminated, retained, g_star, g_circ)


# -- the linear special case -------------------------------------------------


def _back_substitute(T: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    n = T.shape[0]
    out = np.zeros(n)
    for i in range(n - 1, -1, -1):
        out[i] = (rhs[i] - T[i, i + 1 :] @ out[i + 1 :]) / T[i, i]
    return out


@dataclass
class LinearTriangularForm:
    """Row-triangularized linear constraints split into solve stages.

    The rows come from a QR factorization of the original ``A``; solving
    ``[A22 A23][x; u] = b2`` walks the reduced manifold and back-substituting
    ``A11 y = b1 - A12 x - A13 u`` recovers the full point.
    """

    a11: np.ndarray
    a12: np.ndarray
    a13: np.ndarray
    a22: np.ndarray
    a23: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    m: int = field(default=0)

    @property
    def k(self) -> int:
        return self.a11.shape[0] + self.a22.shape[0]

    def solve_reduced(self, u: np.ndarray) -> np.ndarray:
        """x such that [A22 A23][x; u] = b2, for a freely chosen u."""
        u = np.asarray(u, dtype=float)
        return _back_substitute(self.a22, self.b2 - self.a23 @ u)

    def recover(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Full point z = [y x u] with y back-substituted from the top block."""
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        y = _back_substitute(self.a11, self.b1 - self.a12 @ x - self.a13 @ u)
        return np.concatenate([y, x, u])


def linear_whitney(A: np.ndarray, b: np.ndarray, m: int) -> LinearTriangularForm:
    """Triangularize the linear system ``A z = b`` into the two-stage form.

    ``A`` must be k x (m + k) with full row rank and k > m + 1, so the
    variable blocks are y (k - m - 1), x (m + 1) and u (m).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    k = A.shape[0]
    if m < 0:
        raise ValueError("m must be nonnegative")
    if A.shape[1] != m + k:
        raise ValueError(f"A must be k x (m + k); got {A.shape} with m={m}")
    if k <= m + 1:
        raise ValueError(f"need k > m + 1; got k={k}, m={m}")
    if b.shape != (k,):
        raise ValueError("b must have one entry per row of A")

    q, r = np.linalg.qr(A)
    diag = np.abs(np.diagonal(r))
    tol = max(A.shape) * np.finfo(float).eps * (diag.max() if k else 0.0)
    if k and diag.min() <= tol:
        raise RankDeficientError(
            "triangularization failed: A is rank deficient (or a leading "
            "column block is singular in this variable order)"
        )
    bt = q.T @ b

    split = k - m - 1
    return LinearTriangularForm(
        a11=r[:split, :split],
        a12=r[:split, split:k],
        a13=r[:split, k:],
        a22=r[split:, split:k],
        a23=r[split:, k:],
        b1=bt[:split],
        b2=bt[split:],
        m=m,
    )
