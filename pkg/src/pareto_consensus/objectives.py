"""Convex, continuously differentiable objectives with analytic gradients.

Coordinates are numbered from 1 (``x_1`` is ``x[0]``). Every kind reduces to a
normal form ``x'Qx + l'x + c + sum_t a_t exp(b_t x_{p_t})`` that the engine
kernel consumes; ``evaluate``/``gradient`` on the kinds themselves use the
direct formulas.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionError,
    IterationCapError,
    NotConvexError,
    NotQuadraticError,
    ObjectiveError,
    SingularProblemError,
)

PSD_TOL = 1e-12


@dataclass(frozen=True)
class NormalForm:
    quad: np.ndarray
    lin: np.ndarray
    const: float
    exp_coord: np.ndarray  # 0-based
    exp_coef: np.ndarray
    exp_rate: np.ndarray

    @property
    def dim(self) -> int:
        return self.lin.shape[0]

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = x @ self.quad @ x + self.lin @ x + self.const
        if self.exp_coord.size:
            out += np.sum(self.exp_coef * np.exp(self.exp_rate * x[self.exp_coord]))
        return float(out)

    def magnitude(self, x) -> float:
        """Sum of the absolute values of the terms of ``value``; sets its rounding scale."""
        x = np.asarray(x, dtype=float)
        out = abs(x) @ abs(self.quad) @ abs(x) + abs(self.lin) @ abs(x) + abs(self.const)
        if self.exp_coord.size:
            out += np.sum(abs(self.exp_coef) * np.exp(self.exp_rate * x[self.exp_coord]))
        return float(out)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        g = 2.0 * (self.quad @ x) + self.lin
        if self.exp_coord.size:
            terms = self.exp_coef * self.exp_rate * np.exp(self.exp_rate * x[self.exp_coord])
            g = g + np.bincount(self.exp_coord, weights=terms, minlength=self.dim)
        return g

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        H = 2.0 * self.quad
        if self.exp_coord.size:
            curv = self.exp_coef * self.exp_rate**2 * np.exp(self.exp_rate * x[self.exp_coord])
            H = H + np.diag(np.bincount(self.exp_coord, weights=curv, minlength=self.dim))
        return H

    def __add__(self, other: "NormalForm") -> "NormalForm":
        return NormalForm(
            quad=self.quad + other.quad,
            lin=self.lin + other.lin,
            const=self.const + other.const,
            exp_coord=np.concatenate([self.exp_coord, other.exp_coord]),
            exp_coef=np.concatenate([self.exp_coef, other.exp_coef]),
            exp_rate=np.concatenate([self.exp_rate, other.exp_rate]),
        )

    def scaled(self, w: float) -> "NormalForm":
        return NormalForm(self.quad * w, self.lin * w, self.const * w,
                          self.exp_coord.copy(), self.exp_coef * w, self.exp_rate.copy())


def _empty_normal_form(dim: int) -> NormalForm:
    return NormalForm(np.zeros((dim, dim)), np.zeros(dim), 0.0,
                      np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0))


def _check_coord(p) -> int:
    if isinstance(p, bool) or int(p) != p or p < 1:
        raise ObjectiveError(f"coordinate index must be a positive integer, got {p!r}")
    return int(p)


class Objective:
    """Base class; subclasses define ``coords``, ``_value``, ``_grad`` and ``normal_form``."""

    kind = "abstract"
    coords: tuple

    @property
    def min_dim(self) -> int:
        return max(self.coords) if self.coords else 0

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] < self.min_dim:
            raise DimensionError(f"{self.kind} reads x_{self.min_dim} but got a point of shape {x.shape}")
        return x

    def evaluate(self, x) -> float:
        return float(self._value(self._check(x)))

    def gradient(self, x) -> np.ndarray:
        return self._grad(self._check(x))

    def __call__(self, x) -> float:
        return self.evaluate(x)


@dataclass(frozen=True)
class AffineQuadratic1D(Objective):
    """``a (x_p - center)^2 + offset``."""

    coord: int
    a: float
    center: float = 0.0
    offset: float = 0.0
    kind = "affine_quadratic_1d"

    def __post_init__(self):
        _check_coord(self.coord)
        if self.a < 0:
            raise NotConvexError(f"curvature a={self.a} must be nonnegative")

    @property
    def coords(self):
        return (self.coord,)

    def _value(self, x):
        return self.a * (x[self.coord - 1] - self.center) ** 2 + self.offset

    def _grad(self, x):
        g = np.zeros_like(x)
        g[self.coord - 1] = 2.0 * self.a * (x[self.coord - 1] - self.center)
        return g

    def normal_form(self, dim: int) -> NormalForm:
        nf = _empty_normal_form(dim)
        p = self.coord - 1
        nf.quad[p, p] = self.a
        nf.lin[p] = -2.0 * self.a * self.center
        return NormalForm(nf.quad, nf.lin, self.a * self.center**2 + self.offset,
                          nf.exp_coord, nf.exp_coef, nf.exp_rate)


@dataclass(frozen=True)
class QuadraticForm(Objective):
    """``x_S' M x_S`` for the listed coordinates ``S``; ``M`` must be PSD."""

    coords: tuple
    matrix: tuple
    kind = "quadratic_form"

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(_check_coord(p) for p in self.coords))
        M = np.asarray(self.matrix, dtype=float)
        k = len(self.coords)
        if M.shape != (k, k):
            raise ObjectiveError(f"matrix shape {M.shape} does not match {k} coordinates")
        M = 0.5 * (M + M.T)
        lo = np.linalg.eigvalsh(M).min() if k else 0.0
        if lo < -PSD_TOL * max(1.0, np.abs(M).max()):
            raise NotConvexError(f"quadratic form is not positive semidefinite (min eigenvalue {lo:.3g})")
        object.__setattr__(self, "matrix", tuple(map(tuple, M)))

    @property
    def _M(self):
        return np.asarray(self.matrix)

    def _idx(self):
        return np.asarray(self.coords) - 1

    def _value(self, x):
        xs = x[self._idx()]
        return xs @ self._M @ xs

    def _grad(self, x):
        g = np.zeros_like(x)
        idx = self._idx()
        g[idx] = 2.0 * (self._M @ x[idx])
        return g

    def normal_form(self, dim: int) -> NormalForm:
        nf = _empty_normal_form(dim)
        idx = self._idx()
        nf.quad[np.ix_(idx, idx)] += self._M
        return nf


@dataclass(frozen=True)
class Linear(Objective):
    """``sum_p a_p x_p + const``."""

    coords: tuple
    coeffs: tuple
    const: float = 0.0
    kind = "linear"

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(_check_coord(p) for p in self.coords))
        object.__setattr__(self, "coeffs", tuple(float(a) for a in self.coeffs))
        if len(self.coords) != len(self.coeffs):
            raise ObjectiveError("linear objective needs one coefficient per coordinate")

    def _value(self, x):
        return sum(a * x[p - 1] for p, a in zip(self.coords, self.coeffs)) + self.const

    def _grad(self, x):
        g = np.zeros_like(x)
        for p, a in zip(self.coords, self.coeffs):
            g[p - 1] += a
        return g

    def normal_form(self, dim: int) -> NormalForm:
        nf = _empty_normal_form(dim)
        for p, a in zip(self.coords, self.coeffs):
            nf.lin[p - 1] += a
        return NormalForm(nf.quad, nf.lin, self.const, nf.exp_coord, nf.exp_coef, nf.exp_rate)


@dataclass(frozen=True)
class ExponentialSum(Objective):
    """``sum_t coef_t exp(rate_t x_{p_t})`` with ``coef_t >= 0``.

    ``terms`` is a sequence of ``(coef, rate, coord)`` triples.
    """

    terms: tuple
    kind = "exponential_sum"

    def __post_init__(self):
        terms = tuple((float(a), float(b), _check_coord(p)) for a, b, p in self.terms)
        for a, _, _ in terms:
            if a < 0:
                raise NotConvexError(f"exponential coefficient {a} must be nonnegative")
        object.__setattr__(self, "terms", terms)

    @property
    def coords(self):
        return tuple(sorted({p for _, _, p in self.terms}))

    def _value(self, x):
        return sum(a * np.exp(b * x[p - 1]) for a, b, p in self.terms)

    def _grad(self, x):
        g = np.zeros_like(x)
        for a, b, p in self.terms:
            g[p - 1] += a * b * np.exp(b * x[p - 1])
        return g

    def normal_form(self, dim: int) -> NormalForm:
        nf = _empty_normal_form(dim)
        return NormalForm(
            nf.quad, nf.lin, 0.0,
            np.array([p - 1 for _, _, p in self.terms], dtype=np.int64),
            np.array([a for a, _, _ in self.terms]),
            np.array([b for _, b, _ in self.terms]),
        )


@dataclass(frozen=True)
class SumOfSquares(Objective):
    """``sum_{p in S} x_p^2``."""

    coords: tuple
    kind = "sum_of_squares"

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(_check_coord(p) for p in self.coords))

    def _value(self, x):
        xs = x[np.asarray(self.coords) - 1]
        return xs @ xs

    def _grad(self, x):
        g = np.zeros_like(x)
        idx = np.asarray(self.coords) - 1
        g[idx] = 2.0 * x[idx]
        return g

    def normal_form(self, dim: int) -> NormalForm:
        nf = _empty_normal_form(dim)
        for p in self.coords:
            nf.quad[p - 1, p - 1] += 1.0
        return nf


@dataclass(frozen=True)
class Composite(Objective):
    """Nonnegative combination ``sum_k c_k g_k`` of other objectives.

    ``parts`` is a sequence of ``(weight, objective)`` pairs.
    """

    parts: tuple
    kind = "composite"

    def __post_init__(self):
        parts = tuple((float(w), f) for w, f in self.parts)
        for w, f in parts:
            if w < 0:
                raise NotConvexError(f"composite weight {w} must be nonnegative")
            if not isinstance(f, Objective):
                raise ObjectiveError(f"composite part {f!r} is not an Objective")
        object.__setattr__(self, "parts", parts)

    @property
    def coords(self):
        return tuple(sorted({p for _, f in self.parts for p in f.coords}))

    def _value(self, x):
        return sum(w * f._value(x) for w, f in self.parts)

    def _grad(self, x):
        g = np.zeros_like(x)
        for w, f in self.parts:
            g += w * f._grad(x)
        return g

    def normal_form(self, dim: int) -> NormalForm:
        nf = _empty_normal_form(dim)
        for w, f in self.parts:
            nf = nf + f.normal_form(dim).scaled(w)
        return nf


def evaluate(f: Objective, x) -> float:
    return f.evaluate(x)


def gradient(f: Objective, x) -> np.ndarray:
    return f.gradient(x)


def fd_check(f: Objective, x, h: float = 1e-6) -> float:
    """Max over coordinates of ``|central difference - analytic| / (1 + |analytic|)``.

    The quotient divides by the step actually realised in floating point,
    ``(x_p + h) - (x_p - h)``, so dyadic points and steps are exact on linear
    functions. Otherwise expect rounding of order ``eps |f(x)| / h``.
    Overflow anywhere in the stencil yields ``inf``.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    x = f._check(x)
    with np.errstate(over="ignore", invalid="ignore"):
        g = f.gradient(x)
        worst = 0.0
        for p in range(x.shape[0]):
            hi, lo = x.copy(), x.copy()
            hi[p] += h
            lo[p] -= h
            cd = (f.evaluate(hi) - f.evaluate(lo)) / (hi[p] - lo[p])
            err = abs(cd - g[p]) / (1.0 + abs(g[p]))
            if not np.isfinite(err):
                return np.inf
            worst = max(worst, err)
    return worst


# -- weighted problems ----------------------------------------------------------

@dataclass(frozen=True)
class WeightedProblem:
    """``minimize sum_i w_i f_i(x)`` over ``x`` in R^dim.

    Weights must be strictly positive and sum to 1 unless ``strict=False``
    (used for single-objective reductions in tests).
    """

    objectives: tuple
    weights: np.ndarray
    dim: int
    strict: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "objectives", tuple(self.objectives))
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.shape != (len(self.objectives),):
            raise DimensionError(f"{len(self.objectives)} objectives but weights of shape {w.shape}")
        if self.strict and (np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9):
            raise ObjectiveError(f"weights must be positive and sum to 1, got {w}")
        for i, f in enumerate(self.objectives, start=1):
            if f.min_dim > self.dim:
                raise DimensionError(f"objective {i} reads x_{f.min_dim} but dim={self.dim}")

    def normal_form(self) -> NormalForm:
        nf = _empty_normal_form(self.dim)
        for w, f in zip(self.weights, self.objectives):
            nf = nf + f.normal_form(self.dim).scaled(w)
        return nf

    def value(self, x) -> float:
        return weighted_value_and_gradient(self, x)[0]


def weighted_value_and_gradient(p: WeightedProblem, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (p.dim,):
        raise DimensionError(f"point has shape {x.shape}, problem dimension is {p.dim}")
    val = 0.0
    grad = np.zeros(p.dim)
    for w, f in zip(p.weights, p.objectives):
        val += w * f.evaluate(x)
        grad += w * f.gradient(x)
    return val, grad


def quadratic_minimizer(p: WeightedProblem) -> np.ndarray:
    """Closed-form minimiser of a weighted sum of quadratics.

    When every objective is a 1-d affine quadratic on the same coordinate of a
    1-d problem the answer is ``sum(w a c) / sum(w a)``; otherwise the
    stationarity system ``2 Q x = -l`` is solved and ``Q`` must be positive
    definite.
    """
    objs = p.objectives
    if p.dim == 1 and all(isinstance(f, AffineQuadratic1D) and f.coord == 1 for f in objs):
        wa = np.array([w * f.a for w, f in zip(p.weights, objs)])
        if wa.sum() <= 0:
            raise SingularProblemError("aggregate curvature is zero")
        return np.array([float(wa @ np.array([f.center for f in objs]) / wa.sum())])
    nf = p.normal_form()
    if nf.exp_coord.size and np.any(nf.exp_coef != 0):
        raise NotQuadraticError("problem has exponential terms; use centralized_minimize")
    try:
        np.linalg.cholesky(nf.quad)
    except np.linalg.LinAlgError:
        raise SingularProblemError("aggregate quadratic form is not positive definite") from None
    return np.linalg.solve(2.0 * nf.quad, -nf.lin)


def _descent_direction(nf: NormalForm, x, g, newton: bool):
    if newton:
        try:
            c = np.linalg.cholesky(nf.hess(x))
        except np.linalg.LinAlgError:
            return -g
        d = -np.linalg.solve(c.T, np.linalg.solve(c, g))
        if np.all(np.isfinite(d)):
            return d
    return -g


def centralized_minimize(p: WeightedProblem, x0=None, tol: float = 1e-8, *, step0: float = 1.0,
                         shrink: float = 0.5, armijo: float = 1e-4, max_iter: int = 10**6,
                         method: str = "newton") -> np.ndarray:
    """Backtracking descent until ``||grad|| <= tol``.

    ``method="newton"`` steps along the Newton direction whenever the Hessian
    is positive definite and along ``-grad`` otherwise; ``"gradient"`` always
    uses ``-grad``. Raises IterationCapError carrying the best point and its
    gradient norm if ``max_iter`` iterations are not enough.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if method not in ("newton", "gradient"):
        raise ValueError(f"unknown method {method!r}")
    nf = p.normal_form()
    x = np.zeros(p.dim) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (p.dim,):
        raise DimensionError(f"starting point has shape {x.shape}, problem dimension is {p.dim}")
    with np.errstate(over="ignore", invalid="ignore"):
        fx = nf.value(x)
        g = nf.grad(x)
        for _ in range(max_iter):
            gnorm = float(np.linalg.norm(g))
            if gnorm <= tol:
                return x
            d = _descent_direction(nf, x, g, method == "newton")
            slope = float(g @ d)
            noise = 8.0 * np.finfo(float).eps * max(nf.magnitude(x), 1.0)
            t = step0
            while True:
                cand = x + t * d
                fc = nf.value(cand)
                if np.isfinite(fc):
                    if -armijo * t * slope > noise:
                        if fc <= fx + armijo * t * slope:
                            break
                    elif np.linalg.norm(nf.grad(cand)) < gnorm:
                        # predicted decrease is below the rounding of f, so
                        # values cannot rank the candidates; gradients can
                        break
                t *= shrink
                if t < 1e-300:
                    raise IterationCapError("line search failed", best=x, residual=gnorm)
            if np.array_equal(cand, x):
                # step below the resolution of x; no further progress is possible
                raise IterationCapError("stalled before reaching tol", best=x, residual=gnorm)
            x, fx = cand, fc
            g = nf.grad(x)
    raise IterationCapError(f"no convergence within {max_iter} iterations", best=x,
                            residual=float(np.linalg.norm(g)))


def stack_normal_forms(objectives: Sequence[Objective], dim: int):
    """Pack per-agent normal forms into arrays for the engine kernel.

    Returns ``(quad[n,m,m], lin[n,m], exp_agent, exp_coord, exp_coef, exp_rate)``.
    """
    n = len(objectives)
    quad = np.zeros((n, dim, dim))
    lin = np.zeros((n, dim))
    agents, coords, coefs, rates = [], [], [], []
    for i, f in enumerate(objectives):
        if f.min_dim > dim:
            raise DimensionError(f"objective of agent {i + 1} reads x_{f.min_dim} but dim={dim}")
        nf = f.normal_form(dim)
        quad[i] = nf.quad
        lin[i] = nf.lin
        agents += [i] * nf.exp_coord.size
        coords += list(nf.exp_coord)
        coefs += list(nf.exp_coef)
        rates += list(nf.exp_rate)
    return (quad, lin, np.array(agents, dtype=np.int64), np.array(coords, dtype=np.int64),
            np.array(coefs, dtype=float), np.array(rates, dtype=float))


def oracle_minimizer(p: WeightedProblem, x0=None, tol: float = 1e-8) -> np.ndarray:
    """Closed form when the problem is a positive-definite quadratic, descent otherwise."""
    try:
        return quadratic_minimizer(p)
    except (NotQuadraticError, SingularProblemError):
        return centralized_minimize(p, x0=x0, tol=tol)
