"""Construction of the associated (regularization) matrix.

The pipeline has three exact stages:

1. :func:`binomial_stencil` places signed binomial weights for one
   coefficient at one singularity order into an (m+1) x (m+1) grid.
2. :func:`quadratic_form` sums the stencils, weighted by the coefficient
   symbols, into the symbolic quadratic-form matrix Q.
3. :func:`associated_matrix` maps Q to the n x n associated matrix F whose
   quasi-derivative system realizes the differential expression; its exact
   inverse is :func:`quadratic_form_from_associated`.

All entries are :class:`~quasiweyl.symbolic.CoeffExpression` values, so the
structure conditions and the round-trip identity can be checked with zero
tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Mapping, Sequence

import numpy as np

from .model import CoefficientSet, DomainViolation, SingularityOrders, order_bound
from .symbolic import CoeffExpression, Polynomial

__all__ = [
    "IndexOutOfRange",
    "ShapeMismatch",
    "StructureViolation",
    "ChiMatrix",
    "binomial_stencil",
    "QuadraticForm",
    "quadratic_form",
    "AssociatedMatrix",
    "associated_matrix",
    "quadratic_form_from_associated",
    "regularize",
    "system_evaluator",
    "StructureReport",
    "structure_report",
]


class IndexOutOfRange(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


class StructureViolation(ValueError):
    pass


ZERO = CoeffExpression.zero()
ONE = CoeffExpression.constant(1)


@dataclass(frozen=True)
class ChiMatrix:
    """Integer stencil for coefficient position nu at singularity order i."""

    nu: int
    i: int
    m: int
    entries: tuple[tuple[int, ...], ...]

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=int)


def binomial_stencil(nu: int, i: int, m: int) -> ChiMatrix:
    """Stencil with C(i, s) weights on the anti-diagonal band r + j = i + 2k
    for even nu = 2k, and C(i+1, s) - 2*C(i, s-1) weights on the band
    r + j = i + 1 + 2k for odd nu = 2k + 1.
    """
    if not 0 <= nu <= 2 * m - 1:
        raise IndexOutOfRange(f"nu = {nu} outside 0..{2 * m - 1}")
    if not 0 <= i <= order_bound(2 * m, nu):
        raise IndexOutOfRange(f"order i = {i} out of range for nu = {nu}, m = {m}")
    grid = [[0] * (m + 1) for _ in range(m + 1)]
    k, odd = divmod(nu, 2)
    if not odd:
        for s in range(i + 1):
            grid[s + k][i - s + k] = comb(i, s)
    else:
        for s in range(i + 2):
            weight = comb(i + 1, s) - (2 * comb(i, s - 1) if s >= 1 else 0)
            grid[s + k][i + 1 - s + k] = weight
    return ChiMatrix(nu, i, m, tuple(tuple(row) for row in grid))


@dataclass(frozen=True)
class QuadraticForm:
    """(m+1) x (m+1) symbolic matrix of the sesquilinear-form coefficients."""

    n: int
    entries: tuple[tuple[CoeffExpression, ...], ...]

    @property
    def m(self) -> int:
        return self.n // 2

    def entry(self, r: int, j: int) -> CoeffExpression:
        """0-based access q_{r,j}."""
        return self.entries[r][j]

    def render(self) -> list[list[str]]:
        return [[e.render() for e in row] for row in self.entries]


def quadratic_form(orders: SingularityOrders) -> QuadraticForm:
    """Symbolic Q: the stencil sum over all coefficient positions."""
    m_grid = orders.m
    size = m_grid + 1
    acc = [[ZERO for _ in range(size)] for _ in range(size)]
    for nu, i in enumerate(orders.orders):
        chi = binomial_stencil(nu, i, m_grid)
        s_nu = CoeffExpression.symbol(nu)
        for r in range(size):
            row = chi.entries[r]
            for j in range(size):
                if row[j]:
                    acc[r][j] = acc[r][j] + row[j] * s_nu
    return QuadraticForm(orders.n, tuple(tuple(row) for row in acc))


@dataclass(frozen=True)
class AssociatedMatrix:
    """n x n symbolic associated matrix with the structure conditions

    * zero above the first superdiagonal,
    * ones on the first superdiagonal,
    * zero on and below the diagonal in rows 1..m-1+tau and in
      columns m+2..n from the diagonal down.
    """

    n: int
    entries: tuple[tuple[CoeffExpression, ...], ...]

    @property
    def m(self) -> int:
        return self.n // 2

    @property
    def tau(self) -> int:
        return self.n % 2

    def entry(self, k: int, j: int) -> CoeffExpression:
        """1-based access f_{k,j}."""
        return self.entries[k - 1][j - 1]

    def trace(self) -> CoeffExpression:
        t = ZERO
        for k in range(self.n):
            t = t + self.entries[k][k]
        return t

    def symbols(self) -> frozenset[int]:
        out: set[int] = set()
        for row in self.entries:
            for e in row:
                out |= e.symbols()
        return frozenset(out)

    def substitute(self, assignment: Mapping[int, Polynomial]) -> list[list[Polynomial]]:
        """Exact polynomial matrix F(x) for polynomial coefficients."""
        return [[e.substitute(assignment) for e in row] for row in self.entries]

    def set_symbols(self, assignment: Mapping[int, Fraction | int]) -> "AssociatedMatrix":
        rows = tuple(tuple(e.set_symbols(assignment) for e in row) for row in self.entries)
        return AssociatedMatrix(self.n, rows)

    def render(self) -> list[list[str]]:
        return [[e.render() for e in row] for row in self.entries]

    def render_latex(self) -> list[list[str]]:
        return [[e.render_latex() for e in row] for row in self.entries]


def _empty_defined(n: int):
    entries = [[ZERO for _ in range(n)] for _ in range(n)]
    defined = [[False for _ in range(n)] for _ in range(n)]
    return entries, defined


def _set(entries, defined, k: int, j: int, value: CoeffExpression):
    # 1-based indices; double assignment would mean the completion rules
    # overlap, which the construction guarantees never happens.
    assert not defined[k - 1][j - 1], f"entry ({k},{j}) assigned twice"
    entries[k - 1][j - 1] = value
    defined[k - 1][j - 1] = True


def associated_matrix(Q: QuadraticForm, n: int | None = None) -> AssociatedMatrix:
    """Map the quadratic-form matrix to the associated matrix."""
    if n is None:
        n = Q.n
    m, tau = n // 2, n % 2
    if len(Q.entries) != m + 1:
        raise ShapeMismatch(f"Q must be {m + 1}x{m + 1} for n = {n}")
    q = Q.entry
    entries, defined = _empty_defined(n)

    if tau == 0:
        for j in range(1, m + 1):
            _set(entries, defined, m, j, (-1) ** (m + 1) * q(j - 1, m))
        for k in range(m + 1, 2 * m + 1):
            _set(entries, defined, k, m + 1, (-1) ** (k + 1) * q(m, 2 * m - k))
        for k in range(m + 1, 2 * m + 1):
            for j in range(1, m + 1):
                val = (-1) ** (k + 1) * q(j - 1, 2 * m - k) + (-1) ** (m + k) * (
                    q(j - 1, m) * q(m, 2 * m - k)
                )
                _set(entries, defined, k, j, val)
    else:
        for k in range(m + 1, 2 * m + 2):
            for j in range(1, m + 2):
                _set(entries, defined, k, j, (-1) ** k * q(j - 1, 2 * m + 1 - k))

    # Completion: superdiagonal ones, then the structural zeros.
    for k in range(1, n):
        if not defined[k - 1][k]:
            _set(entries, defined, k, k + 1, ONE)
    for k in range(1, n + 1):
        for j in range(1, n + 1):
            if not defined[k - 1][j - 1]:
                _set(entries, defined, k, j, ZERO)
    return AssociatedMatrix(n, tuple(tuple(row) for row in entries))


def quadratic_form_from_associated(F: AssociatedMatrix) -> QuadraticForm:
    """Exact inverse of :func:`associated_matrix`; validates structure first."""
    report = structure_report(F)
    if not report.structure_ok:
        raise StructureViolation("; ".join(report.violations))
    n, m, tau = F.n, F.m, F.tau
    size = m + 1
    q = [[ZERO for _ in range(size)] for _ in range(size)]
    f = F.entry
    if tau == 0:
        for j in range(1, m + 1):
            q[j - 1][m] = (-1) ** (m + 1) * f(m, j)
        for k in range(m + 1, 2 * m + 1):
            q[m][2 * m - k] = (-1) ** (k + 1) * f(k, m + 1)
        for k in range(m + 1, 2 * m + 1):
            for j in range(1, m + 1):
                q[j - 1][2 * m - k] = (-1) ** (k + 1) * (f(k, j) - f(k, m + 1) * f(m, j))
        q[m][m] = ZERO
    else:
        for k in range(m + 1, 2 * m + 2):
            for j in range(1, m + 2):
                q[j - 1][2 * m + 1 - k] = (-1) ** k * f(k, j)
    return QuadraticForm(n, tuple(tuple(row) for row in q))


@dataclass(frozen=True)
class StructureReport:
    condition_upper_zero: bool  # f_{k,j} = 0 for k + 1 < j
    condition_superdiagonal_one: bool  # f_{k,k+1} = 1
    condition_block_zero: bool  # the two triangular zero blocks
    trace_zero: bool
    violations: tuple[str, ...]
    integrability_checked: bool = False
    integrability_ok: bool = True
    integrability_notes: tuple[str, ...] = ()

    @property
    def structure_ok(self) -> bool:
        return (
            self.condition_upper_zero
            and self.condition_superdiagonal_one
            and self.condition_block_zero
        )

    @property
    def all_ok(self) -> bool:
        return self.structure_ok and self.trace_zero

    def to_json(self) -> dict:
        return {
            "upper_zero": self.condition_upper_zero,
            "superdiagonal_one": self.condition_superdiagonal_one,
            "block_zero": self.condition_block_zero,
            "trace_zero": self.trace_zero,
            "violations": list(self.violations),
            "integrability_checked": self.integrability_checked,
            "integrability_ok": self.integrability_ok,
            "integrability_notes": list(self.integrability_notes),
        }


def structure_report(F: AssociatedMatrix, coeffs: CoefficientSet | None = None) -> StructureReport:
    """Check the zero/one pattern and the symbolic trace of F.

    With a coefficient set supplied, also records whether the square
    integrability expected of the boundary rows/columns (even n) can be
    verified from the coefficient kinds.
    """
    n, m, tau = F.n, F.m, F.tau
    upper = True
    superdiag = True
    blocks = True
    violations: list[str] = []
    for k in range(1, n + 1):
        for j in range(1, n + 1):
            e = F.entry(k, j)
            if k + 1 < j and not e.is_zero:
                upper = False
                violations.append(f"f[{k},{j}] nonzero above the superdiagonal: {e.render()}")
            if j == k + 1 and e != ONE:
                superdiag = False
                violations.append(f"f[{k},{j}] != 1 on the superdiagonal: {e.render()}")
    for k in range(1, m - 1 + tau + 1):
        for j in range(1, k + 1):
            e = F.entry(k, j)
            if not e.is_zero:
                blocks = False
                violations.append(f"f[{k},{j}] nonzero in the upper zero block: {e.render()}")
    for j in range(m + 2, n + 1):
        for k in range(j, n + 1):
            e = F.entry(k, j)
            if not e.is_zero:
                blocks = False
                violations.append(f"f[{k},{j}] nonzero in the lower zero block: {e.render()}")
    trace = F.trace()
    trace_ok = trace.is_zero
    if not trace_ok:
        violations.append(f"trace is {trace.render()}, not 0")

    checked = False
    integ_ok = True
    notes: list[str] = []
    if coeffs is not None and tau == 0:
        checked = True
        for k in range(m + 1, 2 * m + 1):
            for nu in F.entry(k, m + 1).symbols():
                if not coeffs.sigma[nu].square_integrable:
                    integ_ok = False
                    notes.append(f"f[{k},{m + 1}] involves sigma_{nu}, not known square integrable")
        for j in range(1, m + 1):
            for nu in F.entry(m, j).symbols():
                if not coeffs.sigma[nu].square_integrable:
                    integ_ok = False
                    notes.append(f"f[{m},{j}] involves sigma_{nu}, not known square integrable")
    return StructureReport(
        upper, superdiag, blocks, trace_ok, tuple(violations), checked, integ_ok, tuple(notes)
    )


# ---------------------------------------------------------------------------
# Composite construction with a numeric evaluation hook
# ---------------------------------------------------------------------------


def system_evaluator(F: AssociatedMatrix, coeffs: CoefficientSet) -> Callable[[float], np.ndarray]:
    """Compile x -> dense F(x) by substituting sigma_nu(x) into the entries.

    The compiled closure evaluates each coefficient once per point and each
    nonzero entry as a short sum of monomials in those values.
    """
    n = F.n
    static = np.zeros((n, n), dtype=complex)
    compiled: list[tuple[int, int, tuple[tuple[float, tuple[tuple[int, int], ...]], ...]]] = []
    for k in range(n):
        for j in range(n):
            e = F.entries[k][j]
            if e.is_zero:
                continue
            const = 0.0
            monos = []
            for mono, c in e.terms.items():
                if mono:
                    monos.append((float(c), mono))
                else:
                    const += float(c)
            static[k, j] = const
            if monos:
                compiled.append((k, j, tuple(monos)))
    sigma = coeffs.sigma
    used = sorted({idx for _, _, monos in compiled for _, mono in monos for idx, _ in mono})

    def f_eval(x: float) -> np.ndarray:
        vals = {nu: sigma[nu](x) for nu in used}
        A = static.copy()
        for k, j, monos in compiled:
            acc = 0.0
            for c, mono in monos:
                v = c
                for idx, e in mono:
                    v *= vals[idx] ** e
                acc += v
            A[k, j] += acc
        return A

    return f_eval


def regularize(
    coeffs: CoefficientSet,
) -> tuple[AssociatedMatrix, Callable[[float], np.ndarray]]:
    """Full pipeline: coefficients -> symbolic F plus a numeric evaluator."""
    F = associated_matrix(quadratic_form(coeffs.orders))
    return F, system_evaluator(F, coeffs)
