"""Metric Lie algebras and the Euler-Arnold geodesic field.

A left-invariant pseudo-Riemannian metric on a Lie group is encoded by its
Lie algebra (structure constants) together with a nondegenerate quadratic
form ``q``. Geodesics reduce to integral curves of the quadratic vector field
``y -> ad*_y y`` on the algebra, where ``ad*`` is the ``q``-adjoint of ``ad``.

Structure constants follow the convention ``c[i, j, k]`` = coefficient of
``e_k`` in ``[e_i, e_j]``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import InputError, InvariantViolation

JACOBI_TOL = 1e-12
DET_TOL = 1e-12


def _as_fraction(value) -> Fraction:
    if isinstance(value, bool):
        raise InputError("boolean is not a valid coefficient")
    return Fraction(value)


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """Finite-dimensional real Lie algebra given by structure constants.

    ``exact`` holds the constants as :class:`fractions.Fraction` when the
    algebra was built from rational data; in that case the Jacobi identity is
    checked in exact arithmetic.
    """

    dim: int
    structure_constants: np.ndarray
    exact: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        c = np.asarray(self.structure_constants, dtype=float)
        if self.dim < 1 or c.shape != (self.dim,) * 3:
            raise InputError(f"structure constants must have shape {(self.dim,) * 3}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "structure_constants", c)
        if not np.array_equal(c, -np.swapaxes(c, 0, 1)):
            raise InvariantViolation("structure constants are not antisymmetric in the first two indices")
        if self.exact is not None:
            if not _jacobi_exact(self.exact, self.dim):
                raise InvariantViolation("Jacobi identity fails (exact arithmetic)")
        else:
            residual = jacobi_residual(c)
            if residual > JACOBI_TOL:
                raise InvariantViolation(f"Jacobi identity residual {residual:.3e} exceeds {JACOBI_TOL}")

    @classmethod
    def from_rational(
        cls, dim: int, brackets: dict[tuple[int, int], Sequence], exact: bool = True
    ) -> "LieAlgebra":
        """Build from ``{(i, j): coeffs}``; ``[e_j, e_i]`` is filled in by antisymmetry.

        With ``exact=False`` the Jacobi identity is checked in floating point.
        """
        table = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
        for (i, j), coeffs in brackets.items():
            if not (0 <= i < dim and 0 <= j < dim):
                raise InputError(f"bracket index ({i}, {j}) out of range for dim {dim}")
            if len(coeffs) != dim:
                raise InputError(f"bracket [{i},{j}] needs {dim} coefficients, got {len(coeffs)}")
            vals = [_as_fraction(a) for a in coeffs]
            if i == j:
                if any(vals):
                    raise InvariantViolation(f"[e_{i}, e_{i}] must vanish")
                continue
            for k, a in enumerate(vals):
                prev = table[i][j][k]
                if prev != 0 and prev != a:
                    raise InvariantViolation(f"conflicting entries for [e_{i}, e_{j}]")
                table[i][j][k] = a
                if table[j][i][k] != 0 and table[j][i][k] != -a:
                    raise InvariantViolation(f"[e_{i}, e_{j}] and [e_{j}, e_{i}] are not antisymmetric")
                table[j][i][k] = -a
        frozen = tuple(tuple(tuple(row) for row in plane) for plane in table)
        c = np.array([[[float(a) for a in row] for row in plane] for plane in frozen])
        return cls(dim, c, exact=frozen if exact else None)


def jacobi_residual(c: np.ndarray) -> float:
    """Max abs component of [[a,b],e] + [[b,e],a] + [[e,a],b] over basis triples."""
    # [[e_i,e_j],e_k] = c[i,j,l] c[l,k,m]
    nested = np.einsum("ijl,lkm->ijkm", c, c)
    cyc = nested + np.transpose(nested, (1, 2, 0, 3)) + np.transpose(nested, (2, 0, 1, 3))
    return float(np.max(np.abs(cyc))) if cyc.size else 0.0


def _jacobi_exact(exact, dim: int) -> bool:
    for i, j, k in itertools.product(range(dim), repeat=3):
        for m in range(dim):
            total = Fraction(0)
            for a, b, e in ((i, j, k), (j, k, i), (k, i, j)):
                total += sum(exact[a][b][l] * exact[l][e][m] for l in range(dim))
            if total != 0:
                return False
    return True


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """Symmetric nondegenerate bilinear form, stored as its Gram matrix."""

    matrix: np.ndarray
    exact: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError(f"form must be a square matrix, got shape {m.shape}")
        if not np.array_equal(m, m.T):
            raise InvariantViolation("form matrix is not symmetric")
        if abs(np.linalg.det(m)) <= DET_TOL:
            raise InvariantViolation("form matrix is degenerate")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_rational(cls, rows: Sequence[Sequence]) -> "QuadraticForm":
        exact = tuple(tuple(_as_fraction(a) for a in row) for row in rows)
        return cls(np.array([[float(a) for a in row] for row in exact]), exact=exact)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def factorization(self):
        return lu_factor(self.matrix)

    def signature(self) -> tuple[int, int]:
        """(number of positive, number of negative) eigenvalues."""
        ev = np.linalg.eigvalsh(self.matrix)
        return int(np.sum(ev > 0)), int(np.sum(ev < 0))

    def pair(self, a, b) -> float:
        return float(np.asarray(a, dtype=float) @ self.matrix @ np.asarray(b, dtype=float))


@dataclass(frozen=True, eq=False)
class MetricLieAlgebra:
    """A Lie algebra with a nondegenerate inner product ``q``."""

    algebra: LieAlgebra
    form: QuadraticForm
    name: str = ""
    basis: tuple[str, ...] = ()

    def __post_init__(self):
        if self.algebra.dim != self.form.dim:
            raise InputError(f"algebra dim {self.algebra.dim} != form dim {self.form.dim}")
        if self.basis and len(self.basis) != self.dim:
            raise InputError("basis labels do not match dimension")

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def basis_vector(self, label: str) -> np.ndarray:
        e = np.zeros(self.dim)
        e[self.basis.index(label)] = 1.0
        return e

    def _vec(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim,):
            raise InputError(f"expected vector of length {self.dim}, got shape {y.shape}")
        return y

    def ad_matrix(self, v) -> np.ndarray:
        """Row ``a`` holds the components of ``ad_v e_a = [v, e_a]``."""
        return np.einsum("i,iak->ak", self._vec(v), self.algebra.structure_constants)

    def field(self):
        """Euler-Arnold vector field as a plain ``state -> derivative`` callable."""
        c = self.algebra.structure_constants
        q = self.form.matrix
        lu = self.form.factorization

        def euler_arnold(y):
            rhs = np.einsum("i,iak,k->a", y, c, q @ y)
            return lu_solve(lu, rhs)

        return euler_arnold


def bracket(mla: MetricLieAlgebra, x, y) -> np.ndarray:
    """Lie bracket ``[x, y]``."""
    return np.einsum("i,j,ijk->k", mla._vec(x), mla._vec(y), mla.algebra.structure_constants)


def ad_star(mla: MetricLieAlgebra, y, z) -> np.ndarray:
    """The ``w`` with ``q(w, u) = q(z, ad_y u)`` for every basis vector ``u``.

    Solves the dim x dim system with the (cached) LU factorization of the form.
    """
    y, z = mla._vec(y), mla._vec(z)
    rhs = mla.ad_matrix(y) @ (mla.form.matrix @ z)
    try:
        return lu_solve(mla.form.factorization, rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise InvariantViolation("form matrix is singular") from exc


def euler_arnold_field(mla: MetricLieAlgebra, y) -> np.ndarray:
    """Quadratic field ``ad*_y y``; field(lambda*y) = lambda**2 * field(y)."""
    return ad_star(mla, y, y)


def killing_generator_residual(mla: MetricLieAlgebra, v) -> np.ndarray:
    """R[a, b] = q(ad_v e_a, e_b) + q(e_a, ad_v e_b).

    Vanishes exactly when ``ad_v`` is q-skew, i.e. when the left-invariant
    field generated by ``v`` is also right-invariant Killing.
    """
    a = mla.ad_matrix(v)
    q = mla.form.matrix
    return a @ q + q @ a.T


def energy(mla: MetricLieAlgebra, y) -> float:
    """q(y, y)."""
    y = mla._vec(y)
    return float(y @ mla.form.matrix @ y)


# -- built-in algebras --------------------------------------------------------

def aff_r() -> MetricLieAlgebra:
    """aff(R) + R in the basis (T, X, V): [T, X] = X, V central.

    Lorentzian form q = t^2 + 2 x v; V is null and ad_V = 0.
    """
    alg = LieAlgebra.from_rational(3, {(0, 1): [0, 1, 0]})
    form = QuadraticForm.from_rational([[1, 0, 0], [0, 0, 1], [0, 1, 0]])
    return MetricLieAlgebra(alg, form, name="aff-r", basis=("T", "X", "V"))


def sol_r() -> MetricLieAlgebra:
    """sol + R in the basis (T, X, Y, V): [T, X] = X, [T, Y] = -Y, V central.

    Lorentzian form q = t^2 + 2 x v + y^2.
    """
    alg = LieAlgebra.from_rational(4, {(0, 1): [0, 1, 0, 0], (0, 2): [0, 0, -1, 0]})
    form = QuadraticForm.from_rational(
        [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]]
    )
    return MetricLieAlgebra(alg, form, name="sol-r", basis=("T", "X", "Y", "V"))


BUILTIN_ALGEBRAS = {"aff-r": aff_r, "sol-r": sol_r}


def builtin_algebra(name: str) -> MetricLieAlgebra:
    try:
        return BUILTIN_ALGEBRAS[name]()
    except KeyError:
        raise InputError(f"unknown algebra {name!r}; choose from {sorted(BUILTIN_ALGEBRAS)}") from None


def load_algebra(source) -> MetricLieAlgebra:
    """Read an algebra definition from a JSON file path or an already-parsed dict.

    Format: ``{"dim": n, "brackets": [[i, j, [coeffs...]], ...], "form": [[...]]}``,
    zero-indexed. Coefficients may be numbers or rational strings such as "1/2".
    Integer/rational data is validated exactly; float data to ``JACOBI_TOL``.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = source
    try:
        dim = int(data["dim"])
        brackets: dict[tuple[int, int], list] = {}
        for i, j, coeffs in data.get("brackets", []):
            key = (int(i), int(j))
            if key in brackets:
                raise InputError(f"duplicate bracket entry [{i},{j}]")
            brackets[key] = list(coeffs)
        form_rows = [list(row) for row in data["form"]]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed algebra definition: {exc!r}") from exc
    entries = [a for coeffs in brackets.values() for a in coeffs] + [a for row in form_rows for a in row]
    rational = all(isinstance(a, (int, str)) and not isinstance(a, bool) for a in entries)
    try:
        alg = LieAlgebra.from_rational(dim, brackets, exact=rational)
        form = QuadraticForm.from_rational(form_rows)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed algebra definition: {exc!r}") from exc
    return MetricLieAlgebra(alg, form, name=str(data.get("name", "")))
