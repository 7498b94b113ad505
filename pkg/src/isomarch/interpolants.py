"""Edge kernels: divided differences, crossing solvers, tri-cubic cell evaluation.

All solvers work in the normalized coordinate t on the edge [x_i, x_{i+1}]
(node i at t=0, node i+1 at t=1); the wider stencil nodes sit at t=-1 and t=2
(and t=-2 for the five-point WENO window).  Every kernel is a pure function.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .volume import BoundaryPolicy, ScalarGrid

__all__ = [
    "Method",
    "EdgeStencil",
    "CrossingSolution",
    "WenoDiagnostics",
    "DegenerateEdgeError",
    "NoCrossingError",
    "divided_difference",
    "linear_crossing",
    "cubic_crossing",
    "weno_crossing",
    "weno_smoothness",
    "cubic_real_roots",
    "tricubic_eval",
    "TricubicCell",
    "TrilinearCell",
    "gather_cell_neighborhood",
]

#: Root-polish tolerance in normalized edge coordinates.
ROOT_TOL = 1e-12
#: Roots within this slack outside [0, 1] are clamped onto the edge.
WINDOW_SLACK = 1e-9

WENO_EPSILON = 1e-6
WENO_GAMMAS = (0.1, 0.6, 0.3)


class Method(str, enum.Enum):
    LINEAR = "linear"
    CUBIC = "cubic"
    WENO = "weno"


class DegenerateEdgeError(ValueError):
    """Edge endpoints carry the same value; no unique crossing exists."""


class NoCrossingError(ValueError):
    """f - k does not change sign across the edge."""


@dataclass(frozen=True)
class EdgeStencil:
    """Samples (f_{i-1}, f_i, f_{i+1}, f_{i+2}) along an edge axis, spacing h."""

    values: tuple[float, float, float, float]
    h: float

    def __post_init__(self):
        if len(self.values) != 4:
            raise ValueError("EdgeStencil needs exactly four values")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("stencil values must be finite")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"spacing must be finite and > 0, got {self.h}")


@dataclass(frozen=True)
class CrossingSolution:
    """Normalized crossing parameter on [x_i, x_{i+1}] plus provenance."""

    alpha: float
    method: Method
    valid: bool = True


@dataclass(frozen=True)
class WenoDiagnostics:
    """Smoothness indicators and normalized weights of the three substencils."""

    betas: tuple[float, float, float]
    weights: tuple[float, float, float]
    gammas: tuple[float, float, float] = WENO_GAMMAS
    epsilon: float = WENO_EPSILON


def divided_difference(points: Sequence[tuple[float, float]]) -> float:
    """Newton divided difference over (x, f) pairs via the recursive definition."""
    pts = [(float(x), float(f)) for x, f in points]
    if not pts:
        raise ValueError("at least one point is required")
    xs = [x for x, _ in pts]
    if len(set(xs)) != len(xs):
        raise ValueError("abscissae must be distinct")
    coeffs = [f for _, f in pts]
    n = len(pts)
    for level in range(1, n):
        for i in range(n - level):
            coeffs[i] = (coeffs[i + 1] - coeffs[i]) / (xs[i + level] - xs[i])
    return coeffs[0]


# ---------------------------------------------------------------------------
# polynomial root machinery
# ---------------------------------------------------------------------------

def _horner(coeffs: np.ndarray, x: float) -> float:
    acc = 0.0
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


def _newton_polish(coeffs: np.ndarray, x: float, iters: int = 12) -> float:
    deriv = coeffs[1:] * np.arange(1, len(coeffs))
    for _ in range(iters):
        fx = _horner(coeffs, x)
        dfx = _horner(deriv, x)
        if dfx == 0.0:
            break
        step = fx / dfx
        x -= step
        if abs(step) < ROOT_TOL:
            break
    return x


def cubic_real_roots(c0: float, c1: float, c2: float, c3: float) -> list[float]:
    """Real roots of c3 t^3 + c2 t^2 + c1 t + c0 via the closed-form formula.

    Degrades gracefully to quadratic/linear when leading coefficients vanish
    (relative threshold), and polishes each root with a few Newton steps on the
    original polynomial.
    """
    coeffs = np.array([c0, c1, c2, c3], dtype=np.float64)
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return []
    tiny = 1e-14 * scale

    if abs(c3) <= tiny:
        if abs(c2) <= tiny:
            if abs(c1) <= tiny:
                return []
            return [-c0 / c1]
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc < 0.0:
            return []
        sq = math.sqrt(disc)
        # Numerically stable quadratic: avoid cancellation in one root.
        q = -0.5 * (c1 + math.copysign(sq, c1))
        roots = [q / c2]
        if q != 0.0:
            roots.append(c0 / q)
        elif disc > 0.0:
            roots.append(-c1 / c2 - roots[0])
        return [_newton_polish(coeffs, r) for r in roots]

    # Depressed form s^3 + p s + q with t = s - b/3 (monic b = c2/c3).
    b = c2 / c3
    c = c1 / c3
    d = c0 / c3
    p = c - b * b / 3.0
    q = d - b * c / 3.0 + 2.0 * b**3 / 27.0
    shift = -b / 3.0
    delta = (q / 2.0) ** 2 + (p / 3.0) ** 3

    roots: list[float]
    if delta > 1e-14 * max(1.0, q * q, p * p):
        sq = math.sqrt(delta)
        u = math.copysign(abs(-q / 2.0 + sq) ** (1.0 / 3.0), -q / 2.0 + sq)
        v = math.copysign(abs(-q / 2.0 - sq) ** (1.0 / 3.0), -q / 2.0 - sq)
        roots = [u + v + shift]
    elif p == 0.0 and q == 0.0:
        roots = [shift]
    else:
        # Three real roots (or a double root) via the trigonometric method.
        m = 2.0 * math.sqrt(max(-p / 3.0, 0.0))
        if m == 0.0:
            roots = [shift]
        else:
            cosarg = min(1.0, max(-1.0, 3.0 * q / (p * m)))
            theta = math.acos(cosarg) / 3.0
            roots = [
                m * math.cos(theta) + shift,
                m * math.cos(theta - 2.0 * math.pi / 3.0) + shift,
                m * math.cos(theta - 4.0 * math.pi / 3.0) + shift,
            ]
    return [_newton_polish(coeffs, r) for r in roots]


def _real_roots(coeffs: np.ndarray) -> list[float]:
    """Real roots of an ascending-coefficient polynomial (any low degree)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if scale == 0.0:
        return []
    deg = len(coeffs) - 1
    while deg > 0 and abs(coeffs[deg]) <= 1e-14 * scale:
        deg -= 1
    coeffs = coeffs[: deg + 1]
    if deg <= 3:
        padded = np.zeros(4)
        padded[: deg + 1] = coeffs
        return cubic_real_roots(*padded)
    comp = np.roots(coeffs[::-1])
    out = []
    for r in comp:
        if abs(r.imag) <= 1e-9 * max(1.0, abs(r.real)):
            out.append(_newton_polish(coeffs, float(r.real)))
    return out


def _pick_window_root(coeffs: np.ndarray) -> float | None:
    """Median real root of the polynomial inside [0, 1] (with clamp slack)."""
    inside = []
    for r in _real_roots(coeffs):
        if -WINDOW_SLACK <= r <= 1.0 + WINDOW_SLACK:
            inside.append(min(1.0, max(0.0, r)))
    if not inside:
        return None
    inside.sort()
    dedup = [inside[0]]
    for r in inside[1:]:
        if r - dedup[-1] > 1e-9:
            dedup.append(r)
    return dedup[(len(dedup) - 1) // 2]


# ---------------------------------------------------------------------------
# crossing solvers
# ---------------------------------------------------------------------------

def _check_crossing(f0: float, f1: float, k: float) -> None:
    if f0 == f1:
        raise DegenerateEdgeError(f"edge endpoints are equal (f0 = f1 = {f0})")
    if (f0 - k) * (f1 - k) > 0.0:
        raise NoCrossingError(f"f - k does not change sign: f0={f0}, f1={f1}, k={k}")


def linear_crossing(f0: float, f1: float, k: float) -> CrossingSolution:
    """alpha = (k - f0) / (f1 - f0) on the edge [x_i, x_{i+1}]."""
    _check_crossing(f0, f1, k)
    alpha = (k - f0) / (f1 - f0)
    return CrossingSolution(min(1.0, max(0.0, alpha)), Method.LINEAR, True)


# Cubic Lagrange basis over nodes t = -1, 0, 1, 2 as ascending polynomial
# coefficients [1, t, t^2, t^3]; row m corresponds to node i-1+m.
CUBIC_BASIS_POLY = np.array(
    [
        [0.0, -1.0 / 3.0, 0.5, -1.0 / 6.0],
        [1.0, -0.5, -1.0, 0.5],
        [0.0, 1.0, 0.5, -0.5],
        [0.0, -1.0 / 6.0, 0.0, 1.0 / 6.0],
    ]
)


def cubic_crossing(stencil: EdgeStencil, k: float) -> CrossingSolution:
    """Crossing from the cubic through the four stencil nodes.

    The cubic interpolates (t, f) at t = -1, 0, 1, 2, i.e. the Hermite cubic
    whose endpoint slopes come from the cubic-exact four-point finite
    differences (-2f_{i-1} - 3f_i + 6f_{i+1} - f_{i+2})/6h and its mirror.
    Two-point centered differences would cap the crossing accuracy at O(h^3);
    this form keeps the solver O(h^4).  Solved in closed form, Newton-polished,
    median root in [0, 1]; falls back to the linear crossing (valid=False)
    when no root lands on the edge.
    """
    f0, f1 = stencil.values[1], stencil.values[2]
    _check_crossing(f0, f1, k)
    coeffs = np.asarray(stencil.values) @ CUBIC_BASIS_POLY
    coeffs[0] -= k
    root = _pick_window_root(coeffs)
    if root is None:
        return CrossingSolution(linear_crossing(f0, f1, k).alpha, Method.CUBIC, False)
    return CrossingSolution(root, Method.CUBIC, True)


def weno_smoothness(values5: Sequence[float]) -> tuple[float, float, float]:
    """Smoothness indicators beta_1..beta_3 over the five-point window."""
    fm2, fm1, f0, f1, f2 = (float(v) for v in values5)
    b1 = 13.0 / 12.0 * (fm2 - 2.0 * fm1 + f0) ** 2 + 0.25 * (fm2 - 4.0 * fm1 + 3.0 * f0) ** 2
    b2 = 13.0 / 12.0 * (fm1 - 2.0 * f0 + f1) ** 2 + 0.25 * (fm1 - f1) ** 2
    b3 = 13.0 / 12.0 * (f0 - 2.0 * f1 + f2) ** 2 + 0.25 * (3.0 * f0 - 4.0 * f1 + f2) ** 2
    return (b1, b2, b3)


# Quadratic Lagrange substencils of the 5-point window, ascending coefficients
# in t: rows are the three samples of each substencil.
_Q1_POLY = np.array([[0.0, 0.5, 0.5], [0.0, -2.0, -1.0], [1.0, 1.5, 0.5]])   # nodes -2,-1,0
_Q2_POLY = np.array([[0.0, -0.5, 0.5], [1.0, 0.0, -1.0], [0.0, 0.5, 0.5]])   # nodes -1,0,1
_Q3_POLY = np.array([[1.0, -1.5, 0.5], [0.0, 2.0, -1.0], [0.0, -0.5, 0.5]])  # nodes 0,1,2

# Pointwise ideal weights gamma_j(t): the unique quadratic blend for which
# sum_j gamma_j(t) q_j(t) reproduces the full 5-point quartic interpolant.
# All three are nonnegative on [0, 1] and sum to 1 identically.
_G1_POLY = np.array([1.0 / 6.0, -0.25, 1.0 / 12.0])   # (t-1)(t-2)/12
_G2_POLY = np.array([2.0 / 3.0, 0.0, -1.0 / 6.0])     # (4-t^2)/6
_G3_POLY = np.array([1.0 / 6.0, 0.25, 1.0 / 12.0])    # (t+1)(t+2)/12


def weno_crossing(values5: Sequence[float], h: float, k: float) -> tuple[CrossingSolution, WenoDiagnostics]:
    """WENO crossing over the window (f_{i-2} .. f_{i+2}).

    Substencils are the standard WENO-5 interpolation triple of quadratics on
    {i-2..i}, {i-1..i+1}, {i..i+2} (a third four-point cubic substencil does
    not exist inside a five-point window).  The crossing solves
    sum_j gamma_j(t) s_j (q_j(t) - k) = 0 with s_j = 1/(eps+beta_j)^2, where
    the gamma_j(t) are the pointwise ideal weights that make the smooth-data
    blend reproduce the five-point quartic (fifth-order crossings); the
    constant gammas (0.1, 0.6, 0.3) reported in the diagnostics weights are
    the values of gamma_j(t) at the stencil center and drive the classic
    smooth/nonsmooth weight split.
    """
    vals = tuple(float(v) for v in values5)
    if len(vals) != 5:
        raise ValueError("weno_crossing needs exactly five samples")
    if not all(map(math.isfinite, vals)):
        raise ValueError("stencil values must be finite")
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"spacing must be finite and > 0, got {h}")
    fm2, fm1, f0, f1, f2 = vals
    _check_crossing(f0, f1, k)

    betas = weno_smoothness(vals)
    alphaw = [WENO_GAMMAS[j] / (WENO_EPSILON + betas[j]) ** 2 for j in range(3)]
    total = sum(alphaw)
    diag = WenoDiagnostics(betas=betas, weights=tuple(a / total for a in alphaw))

    # Oscillation scalings for the crossing polynomial (gamma-free so that the
    # pointwise blend stays an interpolant of the edge endpoints).
    s = np.array([1.0 / (WENO_EPSILON + b) ** 2 for b in betas])
    s /= s.max()

    q1 = np.array([fm2, fm1, f0]) @ _Q1_POLY
    q2 = np.array([fm1, f0, f1]) @ _Q2_POLY
    q3 = np.array([f0, f1, f2]) @ _Q3_POLY
    for q in (q1, q2, q3):
        q[0] -= k
    poly = (
        s[0] * np.convolve(_G1_POLY, q1)
        + s[1] * np.convolve(_G2_POLY, q2)
        + s[2] * np.convolve(_G3_POLY, q3)
    )
    root = _pick_window_root(poly)
    if root is None:
        sol = CrossingSolution(linear_crossing(f0, f1, k).alpha, Method.WENO, False)
    else:
        sol = CrossingSolution(root, Method.WENO, True)
    return sol, diag


def solve_crossing(method: Method, values5: Sequence[float], h: float, k: float) -> CrossingSolution:
    """Dispatch a crossing solve on a five-point window for any method."""
    fm2, fm1, f0, f1, f2 = (float(v) for v in values5)
    if method is Method.LINEAR:
        return linear_crossing(f0, f1, k)
    if method is Method.CUBIC:
        return cubic_crossing(EdgeStencil((fm1, f0, f1, f2), h), k)
    if method is Method.WENO:
        return weno_crossing(values5, h, k)[0]
    raise ValueError(f"unknown method: {method!r}")


# ---------------------------------------------------------------------------
# tri-cubic (and trilinear) cell interpolants
# ---------------------------------------------------------------------------

def cubic_basis_weights(t) -> np.ndarray:
    """Cubic Lagrange basis over nodes {-1, 0, 1, 2} evaluated at t (shape (...,4))."""
    t = np.asarray(t, dtype=np.float64)
    w = np.empty(t.shape + (4,))
    w[..., 0] = -t * (t - 1.0) * (t - 2.0) / 6.0
    w[..., 1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
    w[..., 2] = -(t + 1.0) * t * (t - 2.0) / 2.0
    w[..., 3] = (t + 1.0) * t * (t - 1.0) / 6.0
    return w


def gather_cell_neighborhood(grid: "ScalarGrid", cell, policy: "BoundaryPolicy") -> np.ndarray:
    """(4,4,4) array of samples at nodes (ci-1..ci+2) x (cj-1..cj+2) x (ck-1..ck+2)."""
    from .volume import resolve_indices

    ci, cj, ck = (int(c) for c in cell)
    offs = np.arange(-1, 3)
    ix = resolve_indices(ci + offs, grid.dims[0], policy)
    iy = resolve_indices(cj + offs, grid.dims[1], policy)
    iz = resolve_indices(ck + offs, grid.dims[2], policy)
    return grid.values[np.ix_(ix, iy, iz)]


class TricubicCell:
    """Tensor-product cubic Lagrange interpolant over one cell's 4x4x4 neighborhood.

    Local coordinates are in cell units: corner (0,0,0) is node (ci,cj,ck),
    corner (1,1,1) is node (ci+1,cj+1,ck+1).  Because the basis is cardinal at
    the stencil nodes, two neighboring cells' interpolants agree exactly on
    their shared face, and the restriction to any lattice line is the 1D cubic
    Lagrange interpolant of that line's four samples.
    """

    def __init__(self, neighborhood: np.ndarray):
        c = np.asarray(neighborhood, dtype=np.float64)
        if c.shape != (4, 4, 4):
            raise ValueError(f"neighborhood must be (4,4,4), got {c.shape}")
        self.c = c

    def eval(self, u, v, w):
        wu = cubic_basis_weights(u)
        wv = cubic_basis_weights(v)
        ww = cubic_basis_weights(w)
        out = np.einsum("...a,...b,...c,abc->...", wu, wv, ww, self.c)
        if out.ndim == 0:
            return float(out)
        return out

    def lattice(self, s: int) -> np.ndarray:
        """Values on the (s+1)^3 sub-lattice of the cell (spacing 1/s)."""
        t = np.arange(s + 1) / s
        wt = cubic_basis_weights(t)
        return np.einsum("ia,jb,kc,abc->ijk", wt, wt, wt, self.c)

    def line_coeffs(self, axis: int, t1: float, t2: float) -> np.ndarray:
        """Ascending cubic coefficients along ``axis`` at fixed transverse coords.

        (t1, t2) are the local coordinates of the other two axes in their
        natural order (e.g. axis=1 fixes (x, z) = (t1, t2)).
        """
        w1 = cubic_basis_weights(t1)
        w2 = cubic_basis_weights(t2)
        if axis == 0:
            line = np.einsum("b,c,abc->a", w1, w2, self.c)
        elif axis == 1:
            line = np.einsum("a,c,abc->b", w1, w2, self.c)
        elif axis == 2:
            line = np.einsum("a,b,abc->c", w1, w2, self.c)
        else:
            raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
        return line @ CUBIC_BASIS_POLY


class TrilinearCell:
    """Trilinear interpolant of one cell's 8 corner samples (same local API)."""

    def __init__(self, corners: np.ndarray):
        c = np.asarray(corners, dtype=np.float64)
        if c.shape != (2, 2, 2):
            raise ValueError(f"corners must be (2,2,2), got {c.shape}")
        self.c = c

    @staticmethod
    def _w(t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        w = np.empty(t.shape + (2,))
        w[..., 0] = 1.0 - t
        w[..., 1] = t
        return w

    def eval(self, u, v, w):
        out = np.einsum("...a,...b,...c,abc->...", self._w(u), self._w(v), self._w(w), self.c)
        if out.ndim == 0:
            return float(out)
        return out

    def lattice(self, s: int) -> np.ndarray:
        t = np.arange(s + 1) / s
        wt = self._w(t)
        return np.einsum("ia,jb,kc,abc->ijk", wt, wt, wt, self.c)

    def line_coeffs(self, axis: int, t1: float, t2: float) -> np.ndarray:
        w1 = self._w(t1)
        w2 = self._w(t2)
        if axis == 0:
            line = np.einsum("b,c,abc->a", w1, w2, self.c)
        elif axis == 1:
            line = np.einsum("a,c,abc->b", w1, w2, self.c)
        else:
            line = np.einsum("a,b,abc->c", w1, w2, self.c)
        # value = line[0] (1-t) + line[1] t
        return np.array([line[0], line[1] - line[0], 0.0, 0.0])


def tricubic_eval(grid: "ScalarGrid", cell, local, policy: "BoundaryPolicy" = None) -> float:
    """Evaluate the cell's tri-cubic Lagrange interpolant at local coords in [0,1]^3."""
    from .volume import BoundaryPolicy

    if policy is None:
        policy = BoundaryPolicy.CLAMP
    ci, cj, ck = (int(c) for c in cell)
    for ax, c in enumerate((ci, cj, ck)):
        if not (0 <= c <= grid.dims[ax] - 2):
            raise ValueError(f"cell index {c} out of range on axis {ax}")
    cellint = TricubicCell(gather_cell_neighborhood(grid, (ci, cj, ck), policy))
    local = np.asarray(local, dtype=np.float64)
    return cellint.eval(local[..., 0], local[..., 1], local[..., 2])
