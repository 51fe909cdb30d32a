"""Truncated multivariate Taylor jets.

A jet of order ``K`` in ``n`` variables at a point ``x0`` stores the Taylor
coefficients ``c_alpha`` of ``f(x0 + dx) = sum_alpha c_alpha dx^alpha`` for all
multi-indices ``|alpha| <= K``.  Arithmetic on jets is exact polynomial
arithmetic modulo degree ``K + 1``, so derivatives of compositions come out
exactly (up to rounding) rather than by finite differences.

Coefficient arrays carry the monomial axis last: shape ``(..., M)``.  Leading
axes broadcast like numpy arrays.  Most of the geometry works on raw
coefficient arrays through :class:`JetAlgebra`; :class:`Jet` is a thin wrapper
that tracks the algebra and the order up to which coefficients are valid.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from . import kernels

__all__ = [
    "JetAlgebra", "Jet", "get_algebra",
    "exp", "log", "sin", "cos", "sinh", "cosh", "sqrt", "power",
    "reciprocal", "absolute", "atan2", "atan",
]


def _monomials(nvars: int, order: int):
    out = []
    for d in range(order + 1):
        # graded lexicographic within each degree
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for v in combo:
                e[v] += 1
            out.append(tuple(e))
    return out


class JetAlgebra:
    """Multiplication, differentiation and composition tables for jets in
    ``nvars`` variables truncated above total degree ``order``."""

    def __init__(self, nvars: int, order: int):
        if nvars < 1 or order < 0:
            raise ValueError("need nvars >= 1 and order >= 0")
        self.nvars = nvars
        self.order = order
        self.monomials = _monomials(nvars, order)
        self.index = {m: i for i, m in enumerate(self.monomials)}
        self.size = len(self.monomials)
        self.degree = np.array([sum(m) for m in self.monomials], dtype=np.intp)
        self.factorial = np.array(
            [math.prod(math.factorial(k) for k in m) for m in self.monomials], dtype=float)

        I, J, K = [], [], []
        for i, mi in enumerate(self.monomials):
            for j, mj in enumerate(self.monomials):
                if sum(mi) + sum(mj) <= order:
                    I.append(i)
                    J.append(j)
                    K.append(self.index[tuple(a + b for a, b in zip(mi, mj))])
        perm = np.argsort(np.array(K), kind="stable")
        self.pair_i = np.ascontiguousarray(np.array(I, dtype=np.intp)[perm])
        self.pair_j = np.ascontiguousarray(np.array(J, dtype=np.intp)[perm])
        self.pair_k = np.ascontiguousarray(np.array(K, dtype=np.intp)[perm])
        # start of each target's run of pairs, for np.add.reduceat
        self.pair_starts = np.searchsorted(self.pair_k, np.arange(self.size))
        self.npairs = len(self.pair_k)
        self._scatter = None

        self.deriv_src = []
        self.deriv_dst = []
        self.deriv_fac = []
        for v in range(nvars):
            src, dst, fac = [], [], []
            for k, m in enumerate(self.monomials):
                if sum(m) < order:
                    up = list(m)
                    up[v] += 1
                    src.append(self.index[tuple(up)])
                    dst.append(k)
                    fac.append(float(up[v]))
            self.deriv_src.append(np.array(src, dtype=np.intp))
            self.deriv_dst.append(np.array(dst, dtype=np.intp))
            self.deriv_fac.append(np.array(fac))

        # recipe for building all monomials of a composition by single products
        self.power_recipe = []
        for k, m in enumerate(self.monomials[1:], start=1):
            v = next(i for i, e in enumerate(m) if e)
            lower = list(m)
            lower[v] -= 1
            self.power_recipe.append((k, self.index[tuple(lower)], v))

    def __repr__(self) -> str:
        return f"JetAlgebra(nvars={self.nvars}, order={self.order})"

    @property
    def scatter(self) -> np.ndarray:
        """Dense 0/1 matrix mapping the pair axis onto the monomial axis."""
        if self._scatter is None:
            S = np.zeros((self.npairs, self.size))
            S[np.arange(self.npairs), self.pair_k] = 1.0
            self._scatter = S
        return self._scatter

    def monomial(self, exponents) -> int:
        return self.index[tuple(exponents)]

    # ---- array-level operations ------------------------------------------

    def truncate(self, c: np.ndarray, order: int) -> np.ndarray:
        if order >= self.order:
            return c
        c = np.array(c, copy=True)
        c[..., self.degree > order] = 0
        return c

    def mul(self, a: np.ndarray, b: np.ndarray, order: int | None = None) -> np.ndarray:
        """Elementwise jet product with numpy broadcasting on leading axes."""
        a = np.asarray(a)
        b = np.asarray(b)
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        dtype = np.result_type(a.dtype, b.dtype, np.float64)
        a2 = np.ascontiguousarray(np.broadcast_to(a, shape + (self.size,)), dtype=dtype)
        b2 = np.ascontiguousarray(np.broadcast_to(b, shape + (self.size,)), dtype=dtype)
        out = kernels.mul(a2.reshape(-1, self.size), b2.reshape(-1, self.size), self)
        out = out.reshape(shape + (self.size,))
        if order is not None and order < self.order:
            out[..., self.degree > order] = 0
        return out

    def einsum(self, spec: str, a: np.ndarray, b: np.ndarray,
               order: int | None = None) -> np.ndarray:
        """Contract jet arrays like ``np.einsum(spec, a, b)`` with jet products.

        ``spec`` names only the leading (non-monomial) axes.
        """
        ins, out = spec.split("->")
        sa, sb = ins.split(",")
        letter = next(ch for ch in "zyxwvutsrqponmlkjihgfedcba" if ch not in spec)
        pa = np.take(a, self.pair_i, axis=-1)
        pb = np.take(b, self.pair_j, axis=-1)
        prod = np.einsum(f"{sa}{letter},{sb}{letter}->{out}{letter}", pa, pb, optimize=True)
        res = np.add.reduceat(prod, self.pair_starts, axis=-1)
        if order is not None and order < self.order:
            res[..., self.degree > order] = 0
        return res

    def deriv(self, c: np.ndarray, var: int) -> np.ndarray:
        out = np.zeros_like(c)
        out[..., self.deriv_dst[var]] = c[..., self.deriv_src[var]] * self.deriv_fac[var]
        return out

    def grad(self, c: np.ndarray, n: int | None = None) -> np.ndarray:
        """Stack of first partials along a new axis just before the monomial axis."""
        n = self.nvars if n is None else n
        return np.stack([self.deriv(c, v) for v in range(n)], axis=-2)

    def series(self, coeffs: np.ndarray, c: np.ndarray, order: int) -> np.ndarray:
        """``sum_k coeffs[k] * (c - c0)^k`` by Horner, ``coeffs`` shaped ``(K+1, ...)``."""
        delta = np.array(c, copy=True)
        delta[..., 0] = 0
        shape = delta.shape
        dtype = np.result_type(delta.dtype, coeffs.dtype)
        nterms = min(order, len(coeffs) - 1)
        co = np.broadcast_to(coeffs[: nterms + 1], (nterms + 1,) + shape[:-1])
        co = np.ascontiguousarray(co.reshape(nterms + 1, -1), dtype=dtype)
        d2 = np.ascontiguousarray(delta.reshape(-1, self.size), dtype=dtype)
        out = kernels.series(co, d2, self).reshape(shape)
        if order < self.order:
            out[..., self.degree > order] = 0
        return out

    def constant(self, value, dtype=float) -> np.ndarray:
        value = np.asarray(value, dtype=dtype)
        out = np.zeros(value.shape + (self.size,), dtype=np.result_type(value.dtype, dtype))
        out[..., 0] = value
        return out

    def coordinates(self, base: np.ndarray) -> list:
        """Jets of the coordinate functions at ``base`` (shape ``(..., k)``, ``k <= nvars``)."""
        base = np.asarray(base, dtype=float)
        out = []
        for i in range(base.shape[-1]):
            c = self.constant(base[..., i])
            if self.order >= 1:
                c[..., 1 + i] = 1.0
            out.append(Jet(self, c))
        return out

    def compose(self, c: np.ndarray, inner: np.ndarray, inner_alg: "JetAlgebra",
                order: int | None = None) -> np.ndarray:
        """Substitute ``y = y(x)`` into a jet ``c`` in the y-variables.

        ``c`` lives in this algebra (the y-variables); ``inner`` has shape
        ``(..., nvars, inner_alg.size)`` and gives the jets of ``y_j(x)`` whose
        values are the expansion point of ``c``.  Leading axes of ``inner``
        (minus the variable axis) must broadcast with those of ``c``.
        """
        order = inner_alg.order if order is None else order
        delta = np.array(inner, copy=True)
        delta[..., 0] = 0
        lead = delta.shape[:-2]
        powers = [None] * self.size
        powers[0] = inner_alg.constant(np.ones(lead), dtype=delta.dtype)
        for k, lower, v in self.power_recipe:
            if self.degree[k] > order:
                break
            powers[k] = inner_alg.mul(powers[lower], delta[..., v, :])
        shape = np.broadcast_shapes(c.shape[:-1], lead)
        dtype = np.result_type(c.dtype, delta.dtype)
        out = np.zeros(shape + (inner_alg.size,), dtype=dtype)
        for k in range(self.size):
            if powers[k] is None:
                break
            out = out + c[..., k, None] * powers[k]
        if order < inner_alg.order:
            out[..., inner_alg.degree > order] = 0
        return out

    def to_derivatives(self, c: np.ndarray) -> np.ndarray:
        """Partial derivatives ``d^alpha f`` from Taylor coefficients."""
        return c * self.factorial

    def matinv(self, a: np.ndarray, order: int | None = None) -> np.ndarray:
        """Inverse of a jet matrix ``(..., n, n, M)`` by the Neumann series
        around its value."""
        order = self.order if order is None else order
        a0 = a[..., 0]
        inv0 = np.linalg.inv(a0)
        nil = np.array(a, copy=True)
        nil[..., 0] = 0
        # X = -inv0 @ N (nilpotent), A^{-1} = sum_k X^k inv0
        x = -np.einsum("...ab,...bcm->...acm", inv0, nil)
        inv0j = self.constant(inv0, dtype=inv0.dtype)
        out = inv0j
        term = inv0j
        for _ in range(order):
            term = self.einsum("...ab,...bc->...ac", x, term, order)
            out = out + term
        return out

    def matmul(self, a, b, order=None):
        return self.einsum("...ab,...bc->...ac", a, b, order)


@lru_cache(maxsize=None)
def get_algebra(nvars: int, order: int) -> JetAlgebra:
    return JetAlgebra(nvars, order)


# --------------------------------------------------------------------------
# wrapper

class Jet:
    """Jet-valued array: coefficients ``c`` of shape ``(..., alg.size)``.

    ``order`` is the degree up to which the coefficients are meaningful;
    differentiation lowers it by one.
    """

    __slots__ = ("alg", "c", "order")
    __array_priority__ = 1000

    def __init__(self, alg: JetAlgebra, c, order: int | None = None):
        self.alg = alg
        self.c = np.asarray(c)
        self.order = alg.order if order is None else order
        if self.order < 0:
            raise ValueError("jet order exhausted; build the jet at a higher order")

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, shape={self.shape}, value={self.value!r})"

    @property
    def shape(self):
        return self.c.shape[:-1]

    @property
    def value(self):
        return self.c[..., 0]

    @property
    def gradient(self) -> np.ndarray:
        if self.order < 1:
            raise ValueError("order-0 jet carries no gradient")
        return self.c[..., 1: 1 + self.alg.nvars]

    def constant(self, value) -> "Jet":
        return Jet(self.alg, self.alg.constant(value))

    def is_constant_jet(self) -> bool:
        return not np.any(self.c[..., 1:])

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.alg, self.c[idx + (slice(None),)], self.order)

    def derivative(self, var: int) -> "Jet":
        return Jet(self.alg, self.alg.deriv(self.c, var), self.order - 1)

    def partial(self, exponents) -> np.ndarray:
        """Value of the partial derivative with the given exponents."""
        if sum(exponents) > self.order:
            raise ValueError("requested derivative beyond jet order")
        k = self.alg.index[tuple(exponents)]
        return self.c[..., k] * self.alg.factorial[k]

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.alg is not self.alg:
                raise ValueError("jets from different algebras")
            return other.c, other.order
        other = np.asarray(other)
        return self.alg.constant(other, dtype=np.result_type(other.dtype, float)), self.alg.order

    def __add__(self, other):
        c, o = self._coerce(other)
        return Jet(self.alg, self.c + c, min(self.order, o))

    __radd__ = __add__

    def __sub__(self, other):
        c, o = self._coerce(other)
        return Jet(self.alg, self.c - c, min(self.order, o))

    def __rsub__(self, other):
        c, o = self._coerce(other)
        return Jet(self.alg, c - self.c, min(self.order, o))

    def __neg__(self):
        return Jet(self.alg, -self.c, self.order)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other)
            return Jet(self.alg, self.c * other[..., None], self.order)
        c, o = self._coerce(other)
        order = min(self.order, o)
        return Jet(self.alg, self.alg.mul(self.c, c, order), order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other)
            return Jet(self.alg, self.c / other[..., None], self.order)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def ipow(self, k: int) -> "Jet":
        if k < 0:
            return reciprocal(self.ipow(-k))
        result = self.constant(np.ones(self.shape))
        result.order = self.order
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __pow__(self, k):
        if isinstance(k, (int, np.integer)):
            return self.ipow(int(k))
        return power(self, k)


# --------------------------------------------------------------------------
# elementary functions (series around the value)

def _apply(u: Jet, coeffs: np.ndarray) -> Jet:
    return Jet(u.alg, u.alg.series(coeffs, u.c, u.order), u.order)


def _kfact(n):
    return np.array([1.0 / math.factorial(k) for k in range(n + 1)])


def _cyclic(u: Jet, cycle) -> Jet:
    K = u.order
    f = _kfact(K)
    coeffs = np.stack([cycle[k % len(cycle)] * f[k] for k in range(K + 1)])
    return _apply(u, coeffs)


def exp(u: Jet) -> Jet:
    e = np.exp(u.value)
    return _cyclic(u, [e])


def sin(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    return _cyclic(u, [s, c, -s, -c])


def cos(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    return _cyclic(u, [c, -s, -c, s])


def sinh(u: Jet) -> Jet:
    s, c = np.sinh(u.value), np.cosh(u.value)
    return _cyclic(u, [s, c])


def cosh(u: Jet) -> Jet:
    s, c = np.sinh(u.value), np.cosh(u.value)
    return _cyclic(u, [c, s])


def log(u: Jet) -> Jet:
    u0 = u.value
    K = u.order
    coeffs = [np.log(u0)]
    for k in range(1, K + 1):
        coeffs.append((-1.0) ** (k - 1) / (k * u0 ** k))
    return _apply(u, np.stack(coeffs))


def power(u: Jet, s) -> Jet:
    """``u ** s`` for a real exponent (array-valued exponents allowed)."""
    u0 = u.value
    s = np.asarray(s, dtype=float)
    K = u.order
    coeffs = []
    binom = np.ones_like(s)
    for k in range(K + 1):
        coeffs.append(binom * np.power(u0, s - k) if k else np.power(u0, s) * np.ones_like(u0))
        binom = binom * (s - k) / (k + 1)
    return _apply(u, np.stack(np.broadcast_arrays(*coeffs)))


def sqrt(u: Jet) -> Jet:
    return power(u, 0.5)


def reciprocal(u: Jet) -> Jet:
    u0 = u.value
    K = u.order
    inv = 1.0 / u0
    coeffs = [inv]
    for _ in range(K):
        coeffs.append(-coeffs[-1] * inv)
    return _apply(u, np.stack(coeffs))


def absolute(u: Jet) -> Jet:
    sign = np.sign(u.value)
    if u.order == 0:
        sign = np.where(sign == 0, 1.0, sign)
    return Jet(u.alg, u.c * sign[..., None], u.order)


def atan(u: Jet) -> Jet:
    """atan of a jet whose value is zero (odd series)."""
    K = u.order
    coeffs = np.zeros((K + 1,) + u.shape)
    for k in range(1, K + 1, 2):
        coeffs[k] = (-1.0) ** ((k - 1) // 2) / k
    coeffs[0] = np.arctan(u.value)
    if np.any(u.value != 0):
        raise ValueError("atan series is expanded at zero only")
    return _apply(u, coeffs)


def atan2(y: Jet, x: Jet) -> Jet:
    y0, x0 = y.value, x.value
    theta0 = np.arctan2(y0, x0)
    num = y * x0 - x * y0
    num.c[..., 0] = 0.0
    den = x * x0 + y * y0
    w = num / den
    w.c[..., 0] = 0.0
    return atan(w) + theta0
