"""
Minimal arithmetic expressions with second-order forward-mode differentiation.

Grammar: numbers, variables ``u1..uk``, named parameters, ``+ - * /``,
``**`` or ``^`` and the functions ``pow``, ``exp`` and ``log``.  Expressions
are parsed with :mod:`ast` and evaluated on :class:`Jet` values that carry the
value, gradient and Hessian with respect to the state vector.
"""

from __future__ import annotations

import ast
import re

import numpy as np

from .errors import DataError


class Jet:
    """Value, gradient (..., k) and Hessian (..., k, k) of a scalar quantity."""

    __slots__ = ("v", "g", "H")

    def __init__(self, v, g, H):
        self.v = v
        self.g = g
        self.H = H

    @classmethod
    def constant(cls, c, like: "Jet"):
        v = np.broadcast_to(np.asarray(c, dtype=float), like.v.shape).copy()
        return cls(v, np.zeros_like(like.g), np.zeros_like(like.H))

    def _lift(self, other):
        return other if isinstance(other, Jet) else Jet.constant(other, self)

    def chain(self, f, df, d2f):
        """Compose a scalar function with known first and second derivatives."""
        d1 = df[..., None]
        d2 = d2f[..., None, None]
        return Jet(f, d1 * self.g,
                   d2 * self.g[..., :, None] * self.g[..., None, :] + d1[..., None] * self.H)

    def __add__(self, other):
        o = self._lift(other)
        return Jet(self.v + o.v, self.g + o.g, self.H + o.H)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.g, -self.H)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        outer = self.g[..., :, None] * o.g[..., None, :]
        return Jet(self.v * o.v,
                   self.v[..., None] * o.g + o.v[..., None] * self.g,
                   self.v[..., None, None] * o.H + o.v[..., None, None] * self.H
                   + outer + np.swapaxes(outer, -1, -2))

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.v
        return self.chain(1.0 / v, -1.0 / v ** 2, 2.0 / v ** 3)

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def __pow__(self, other):
        if isinstance(other, Jet):
            if np.all(other.g == 0) and np.all(other.H == 0):
                return self._powc(other.v)
            return exp(other * log(self))
        return self._powc(np.asarray(other, dtype=float))

    def __rpow__(self, other):
        return exp(self * log(self._lift(other)))

    def _powc(self, c):
        if np.all(c == 0):
            return Jet.constant(1.0, self)
        if np.all(c == 1):
            return self
        v = self.v
        return self.chain(v ** c, c * v ** (c - 1), c * (c - 1) * v ** (c - 2))


def exp(x: Jet) -> Jet:
    e = np.exp(x.v)
    return x.chain(e, e, e)


def log(x: Jet) -> Jet:
    return x.chain(np.log(x.v), 1.0 / x.v, -1.0 / x.v ** 2)


_FUNCTIONS = {"exp": exp, "log": log, "pow": lambda a, b: a ** b}
_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
           ast.Mult: lambda a, b: a * b, ast.Div: lambda a, b: a / b,
           ast.Pow: lambda a, b: a ** b}
_VAR = re.compile(r"^u([1-9][0-9]*)$")


class Expression:
    """A parsed expression in the variables ``u1..uk``."""

    def __init__(self, source: str, k: int, parameters: dict | None = None):
        self.source = source
        self.k = k
        self.parameters = dict(parameters or {})
        try:
            tree = ast.parse(source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise DataError(f"cannot parse expression {source!r}: {exc.msg}") from exc
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise DataError(f"operator {type(node.op).__name__} not allowed in {self.source!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise DataError(f"unary operator not allowed in {self.source!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS or node.keywords:
                raise DataError(f"unknown function call in {self.source!r}")
            expected = 2 if node.func.id == "pow" else 1
            if len(node.args) != expected:
                raise DataError(f"{node.func.id} takes {expected} argument(s) in {self.source!r}")
            for a in node.args:
                self._check(a)
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise DataError(f"non-numeric literal in {self.source!r}")
        elif isinstance(node, ast.Name):
            m = _VAR.match(node.id)
            if m:
                if int(m.group(1)) > self.k:
                    raise DataError(f"variable {node.id} exceeds k={self.k} in {self.source!r}")
            elif node.id not in self.parameters:
                raise DataError(f"unknown name {node.id!r} in {self.source!r}")
        else:
            raise DataError(f"unsupported syntax {type(node).__name__} in {self.source!r}")

    def jet(self, u) -> Jet:
        """Evaluate on states ``u`` of shape (..., k)."""
        u = np.asarray(u, dtype=float)
        eye = np.eye(self.k)
        variables = [Jet(u[..., i], np.broadcast_to(eye[i], u.shape).copy(),
                         np.zeros(u.shape + (self.k,))) for i in range(self.k)]
        template = variables[0]

        def walk(node):
            if isinstance(node, ast.BinOp):
                left, right = walk(node.left), walk(node.right)
                if not isinstance(left, Jet):
                    left = Jet.constant(left, template)
                return _BINOPS[type(node.op)](left, right)
            if isinstance(node, ast.UnaryOp):
                val = walk(node.operand)
                return -val if isinstance(node.op, ast.USub) else val
            if isinstance(node, ast.Call):
                args = [walk(a) for a in node.args]
                args = [a if isinstance(a, Jet) else Jet.constant(a, template) for a in args]
                return _FUNCTIONS[node.func.id](*args)
            if isinstance(node, ast.Constant):
                return float(node.value)
            m = _VAR.match(node.id)
            if m:
                return variables[int(m.group(1)) - 1]
            return float(self.parameters[node.id])

        out = walk(self._tree)
        if not isinstance(out, Jet):
            out = Jet.constant(out, template)
        return out

    def __call__(self, u):
        return self.jet(u).v
