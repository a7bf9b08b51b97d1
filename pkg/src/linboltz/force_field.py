"""Force fields F(t, x, v) and the admissibility checks that make the unit
Gaussian an equilibrium and keep mass conservation intact: div_v F = 0,
F.v = 0, and square-integrability against the Gaussian weight."""
from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .velocity_space import VelocityGrid, bracket

ORTHOGONALITY_TOL = 1e-12
DIVERGENCE_TOL = 1e-12


class ExpressionError(ValueError):
    """Raised when a custom force expression cannot be parsed or evaluated."""


# ---------------------------------------------------------------------------
# safe expression grammar: + - * / cross dot vec sin cos exp, names t x v pi
# ---------------------------------------------------------------------------

_ALLOWED_FUNCS = {"cross", "dot", "vec", "sin", "cos", "exp"}


def _as_vec3(value, nv: int) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    if value.ndim == 2 and value.shape == (nv, 3):
        return value
    if value.shape == (3,):
        return np.broadcast_to(value, (nv, 3))
    raise ExpressionError("expected a 3-vector value")


class _Evaluator(ast.NodeVisitor):
    def __init__(self, t: float, x: float, v: np.ndarray):
        self.env = {"t": t, "x": x, "v": v, "pi": np.pi}
        self.nv = v.shape[0]

    def visit_Expression(self, node):
        return self.visit(node.body)

    def visit_Constant(self, node):
        if isinstance(node.value, (int, float)):
            return float(node.value)
        raise ExpressionError(f"unsupported literal {node.value!r}")

    def visit_Name(self, node):
        if node.id not in self.env:
            raise ExpressionError(f"unknown name {node.id!r}")
        return self.env[node.id]

    def visit_UnaryOp(self, node):
        operand = self.visit(node.operand)
        if isinstance(node.op, ast.USub):
            return -operand
        if isinstance(node.op, ast.UAdd):
            return operand
        raise ExpressionError("unsupported unary operator")

    def visit_BinOp(self, node):
        lhs = self.visit(node.left)
        rhs = self.visit(node.right)
        if isinstance(node.op, ast.Add):
            return lhs + rhs
        if isinstance(node.op, ast.Sub):
            return lhs - rhs
        if isinstance(node.op, ast.Mult):
            return lhs * rhs
        if isinstance(node.op, ast.Div):
            return lhs / rhs
        raise ExpressionError("unsupported binary operator")

    def visit_Call(self, node):
        if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_FUNCS:
            raise ExpressionError("only cross, dot, vec, sin, cos, exp may be called")
        args = [self.visit(a) for a in node.args]
        name = node.func.id
        if name in ("sin", "cos", "exp"):
            if len(args) != 1:
                raise ExpressionError(f"{name} takes one argument")
            return getattr(np, name)(args[0])
        if name == "vec":
            if len(args) != 3:
                raise ExpressionError("vec takes three scalar arguments")
            cols = [np.broadcast_to(np.asarray(a, dtype=float), (self.nv,)) for a in args]
            return np.stack(cols, axis=1)
        if len(args) != 2:
            raise ExpressionError(f"{name} takes two arguments")
        a = _as_vec3(args[0], self.nv)
        b = _as_vec3(args[1], self.nv)
        if name == "cross":
            return np.cross(a, b)
        return np.sum(a * b, axis=1)

    def generic_visit(self, node):
        raise ExpressionError(f"unsupported syntax: {type(node).__name__}")


_ALLOWED_NODES = (ast.Expression, ast.Constant, ast.Name, ast.Load, ast.Call,
                  ast.BinOp, ast.UnaryOp, ast.Add, ast.Sub, ast.Mult, ast.Div,
                  ast.USub, ast.UAdd)


def _compile_expression(text: str):
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression {text!r}: {exc}") from exc
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ExpressionError(
                f"unsupported syntax {type(node).__name__} in {text!r}")
        if isinstance(node, ast.Name) and node.id not in (
                {"t", "x", "v", "pi"} | _ALLOWED_FUNCS):
            raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.Call):
            if (not isinstance(node.func, ast.Name)
                    or node.func.id not in _ALLOWED_FUNCS):
                raise ExpressionError(
                    f"only {sorted(_ALLOWED_FUNCS)} may be called")

    def run(t: float, x: float, v: np.ndarray):
        return _Evaluator(t, x, v).visit(tree)

    return run


# ---------------------------------------------------------------------------
# field variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ForceField:
    """Base force field; ``evaluate`` is vectorized over velocity nodes."""

    name: str
    declared_orthogonal: bool
    declared_divergence_free: bool
    declared_square_integrable: bool

    def evaluate(self, t: float, x: float, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def divergence_v(self, t: float, x: float, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def is_magnetic(self) -> bool:
        return False


@dataclass(frozen=True)
class ZeroForce(ForceField):
    def evaluate(self, t, x, v):
        return np.zeros_like(np.asarray(v, dtype=float))

    def divergence_v(self, t, x, v):
        return np.zeros(np.asarray(v).shape[0])


@dataclass(frozen=True)
class MagneticForce(ForceField):
    """F(t, x, v) = v x B(t, x); orthogonality and zero divergence hold as
    algebraic identities of the cross product."""

    bfield: Callable[[float, float], np.ndarray] = None

    def B(self, t: float, x: float) -> np.ndarray:
        return np.asarray(self.bfield(t, x), dtype=float)

    def evaluate(self, t, x, v):
        return np.cross(np.asarray(v, dtype=float), self.B(t, x))

    def divergence_v(self, t, x, v):
        return np.zeros(np.asarray(v).shape[0])

    @property
    def is_magnetic(self) -> bool:
        return True


@dataclass(frozen=True)
class CustomForce(ForceField):
    """Force given as a closed-form expression over (t, x, v); the matching
    velocity divergence must be supplied in the same grammar."""

    expression: str = "vec(0, 0, 0)"
    divergence_expression: str | None = None
    _eval: Callable = field(default=None, repr=False, compare=False)
    _div: Callable = field(default=None, repr=False, compare=False)

    def evaluate(self, t, x, v):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        try:
            return _as_vec3(self._eval(t, x, v), v.shape[0])
        except ExpressionError:
            raise
        except Exception as exc:  # domain errors from the expression itself
            raise ExpressionError(f"force expression failed: {exc}") from exc

    def divergence_v(self, t, x, v):
        if self._div is None:
            raise ExpressionError(
                "custom force needs an analytic velocity divergence expression"
            )
        v = np.atleast_2d(np.asarray(v, dtype=float))
        out = np.asarray(self._div(t, x, v), dtype=float)
        return np.broadcast_to(out, (v.shape[0],)).copy()


def zero_force() -> ZeroForce:
    return ZeroForce(name="zero", declared_orthogonal=True,
                     declared_divergence_free=True, declared_square_integrable=True)


def magnetic_force(B: Sequence[float] | Callable[[float, float], np.ndarray]) -> MagneticForce:
    if callable(B):
        fn = B
    else:
        const = np.asarray(B, dtype=float)
        if const.shape != (3,):
            raise ValueError("B must be a 3-vector or a callable (t, x) -> 3-vector")

        def fn(t, x, _c=const):
            return _c

    return MagneticForce(name="magnetic", declared_orthogonal=True,
                         declared_divergence_free=True,
                         declared_square_integrable=True, bfield=fn)


def custom_force(
    expression: str,
    divergence_expression: str | None = None,
    declared_orthogonal: bool = False,
    declared_divergence_free: bool = False,
    declared_square_integrable: bool = True,
) -> CustomForce:
    ev = _compile_expression(expression)
    dv = _compile_expression(divergence_expression) if divergence_expression else None
    return CustomForce(
        name="custom", declared_orthogonal=declared_orthogonal,
        declared_divergence_free=declared_divergence_free,
        declared_square_integrable=declared_square_integrable,
        expression=expression, divergence_expression=divergence_expression,
        _eval=ev, _div=dv,
    )


# ---------------------------------------------------------------------------
# admissibility validators
# ---------------------------------------------------------------------------

def sample_lattice(n_times: int = 5, n_positions: int = 5,
                   t_end: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    times = np.linspace(0.0, t_end, n_times)
    positions = np.linspace(0.0, 1.0, n_positions, endpoint=False)
    return times, positions


def check_orthogonality(field: ForceField, grid: VelocityGrid,
                        times: np.ndarray, positions: np.ndarray) -> float:
    """max |F(t, x, v).v| over the sample lattice and all grid nodes."""
    worst = 0.0
    for t in times:
        for x in positions:
            F = field.evaluate(t, x, grid.nodes)
            worst = max(worst, float(np.abs(np.sum(F * grid.nodes, axis=1)).max()))
    return worst


def check_divergence(field: ForceField, grid: VelocityGrid,
                     times: np.ndarray, positions: np.ndarray) -> float:
    """max |div_v F|; builtin variants short-circuit to the exact value 0."""
    if isinstance(field, (ZeroForce, MagneticForce)):
        return 0.0
    worst = 0.0
    for t in times:
        for x in positions:
            worst = max(worst, float(np.abs(field.divergence_v(t, x, grid.nodes)).max()))
    return worst


def check_square_integrability(field: ForceField, grid: VelocityGrid,
                               times: np.ndarray, positions: np.ndarray) -> float:
    """sup over sampled (t, x) of <|F|^2> against the Gaussian weight."""
    worst = 0.0
    for t in times:
        for x in positions:
            F = field.evaluate(t, x, grid.nodes)
            worst = max(worst, bracket(grid, np.sum(F * F, axis=1)))
    return worst


@dataclass(frozen=True)
class ForceValidation:
    max_v_dot_f: float
    max_divergence: float
    max_square_norm: float
    square_norm_bound: float

    @property
    def orthogonal(self) -> bool:
        return self.max_v_dot_f <= ORTHOGONALITY_TOL

    @property
    def divergence_free(self) -> bool:
        return self.max_divergence <= DIVERGENCE_TOL

    @property
    def square_integrable(self) -> bool:
        return np.isfinite(self.max_square_norm) and self.max_square_norm <= self.square_norm_bound

    @property
    def admissible(self) -> bool:
        return self.orthogonal and self.divergence_free and self.square_integrable

    def failure_reason(self) -> str | None:
        if not self.orthogonal:
            return (f"force fails F.v = 0 (max |F.v| = {self.max_v_dot_f:.3e}, "
                    f"tolerance {ORTHOGONALITY_TOL:g}); the Gaussian equilibrium is not stationary")
        if not self.divergence_free:
            return (f"force fails div_v F = 0 (max |div_v F| = {self.max_divergence:.3e}, "
                    f"tolerance {DIVERGENCE_TOL:g}); local mass conservation breaks")
        if not self.square_integrable:
            return (f"force fails square-integrability (<|F|^2> = {self.max_square_norm:.3e} "
                    f"exceeds bound {self.square_norm_bound:g})")
        return None


def validate_force(field: ForceField, grid: VelocityGrid,
                   times: np.ndarray | None = None,
                   positions: np.ndarray | None = None,
                   square_norm_bound: float = 1e6) -> ForceValidation:
    if times is None or positions is None:
        t_default, x_default = sample_lattice()
        times = t_default if times is None else times
        positions = x_default if positions is None else positions
    return ForceValidation(
        max_v_dot_f=check_orthogonality(field, grid, times, positions),
        max_divergence=check_divergence(field, grid, times, positions),
        max_square_norm=check_square_integrability(field, grid, times, positions),
        square_norm_bound=square_norm_bound,
    )


def equilibrium_residual(field: ForceField, grid: VelocityGrid, table,
                         times: np.ndarray | None = None,
                         positions: np.ndarray | None = None) -> float:
    """Stationarity defect of the constant state: the collision sum at the
    equilibrium plus the force term acting on the Gaussian, in L2(M dv).

    Zero (to machine precision) exactly when the field is admissible.
    """
    from .collision import conservation_fix, q_bilinear

    if times is None or positions is None:
        t_default, x_default = sample_lattice()
        times = t_default if times is None else times
        positions = x_default if positions is None else positions
    ones = np.ones(grid.size)
    q_eq = conservation_fix(grid, q_bilinear(table, ones))
    worst = 0.0
    for t in times:
        for x in positions:
            F = field.evaluate(t, x, grid.nodes)
            fv = np.sum(F * grid.nodes, axis=1)
            worst = max(worst, float(np.sqrt(bracket(grid, (fv + q_eq) ** 2))))
    return worst
