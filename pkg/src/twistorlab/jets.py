"""Truncated Taylor jets for exact forward-mode differentiation.

A :class:`Jet` carries a value together with its gradient and (optionally)
its Hessian with respect to a fixed set of input variables.  Arithmetic on
jets is the second-order forward mode of automatic differentiation; it is
exactly what nested dual numbers ``Dual(Dual(x, e_c), Dual(e_d, 0))``
compute, but all directions are propagated in one pass.

Jets created with ``hess=None`` are first-order only; mixing a first-order
jet into a second-order computation drops the Hessian.
"""

import math

import numpy as np


class Jet:
    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess=None):
        self.val = float(val)
        self.grad = grad
        self.hess = hess

    @classmethod
    def variable(cls, value, index, nvars=4, order=2):
        grad = np.zeros(nvars)
        grad[index] = 1.0
        hess = np.zeros((nvars, nvars)) if order >= 2 else None
        return cls(value, grad, hess)

    def __repr__(self):
        return f"Jet({self.val!r}, grad={self.grad!r})"

    # -- helpers -------------------------------------------------------
    def _chain(self, f0, f1, f2):
        """Compose a scalar function with value f0, slope f1, curvature f2."""
        grad = f1 * self.grad
        if self.hess is None:
            return Jet(f0, grad)
        return Jet(f0, grad, f1 * self.hess + f2 * np.outer(self.grad, self.grad))

    @staticmethod
    def _hess_sum(a, b):
        if a is None or b is None:
            return None
        return a + b

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.grad + other.grad,
                       self._hess_sum(self.hess, other.hess))
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            grad = self.grad * other.val + other.grad * self.val
            if self.hess is None or other.hess is None:
                return Jet(self.val * other.val, grad)
            outer = np.outer(self.grad, other.grad)
            hess = self.hess * other.val + other.hess * self.val + outer + outer.T
            return Jet(self.val * other.val, grad, hess)
        return Jet(self.val * other, self.grad * other,
                   None if self.hess is None else self.hess * other)

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.val
        if v == 0.0:
            raise ZeroDivisionError("jet division by zero")
        return self._chain(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return (p * self.log()).exp()
        v = self.val
        if p == 0:
            return Jet(1.0, np.zeros_like(self.grad),
                       None if self.hess is None else np.zeros_like(self.hess))
        if float(p).is_integer() and p > 0:
            n = int(p)
            f1 = n * v ** (n - 1)
            f2 = n * (n - 1) * v ** (n - 2) if n >= 2 else 0.0
            return self._chain(v**n, f1, f2)
        if v <= 0.0:
            raise ValueError("non-integer power of a non-positive jet")
        return self._chain(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    # -- elementary functions -----------------------------------------
    def sin(self):
        s, c = math.sin(self.val), math.cos(self.val)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = math.sin(self.val), math.cos(self.val)
        return self._chain(c, -s, -c)

    def exp(self):
        e = math.exp(self.val)
        return self._chain(e, e, e)

    def log(self):
        v = self.val
        if v <= 0.0:
            raise ValueError("log of non-positive jet")
        return self._chain(math.log(v), 1.0 / v, -1.0 / v**2)

    def sqrt(self):
        v = self.val
        if v <= 0.0:
            raise ValueError("sqrt of non-positive jet")
        r = math.sqrt(v)
        return self._chain(r, 0.5 / r, -0.25 / (r * v))


def _lift(name, real_fn):
    def fn(x):
        if isinstance(x, Jet):
            return getattr(x, name)()
        return real_fn(x)

    fn.__name__ = name
    return fn


sin = _lift("sin", math.sin)
cos = _lift("cos", math.cos)
exp = _lift("exp", math.exp)
log = _lift("log", math.log)
sqrt = _lift("sqrt", math.sqrt)

FUNCTIONS = {"sin": sin, "cos": cos, "exp": exp, "log": log, "sqrt": sqrt}
