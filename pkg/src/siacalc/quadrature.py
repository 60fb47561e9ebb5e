"""Adaptive tensor-product Gauss-Legendre cubature on boxes.

The integrand is vectorised: it receives an array of shape ``(dim, N)`` of
nodes and returns ``N`` values (or a scalar, which is broadcast).  Boxes are
refined globally, worst error first, where a box's error estimate is the
difference between its own rule and the sum over its 2**dim children.
"""

import functools
import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_subdivisions: int = 2**20
    nodes: int = 15

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.nodes < 3 or self.nodes % 2 == 0:
            raise ValueError("Gauss node count must be odd and >= 3")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")

    def tightened(self, factor=0.5):
        return QuadratureConfig(
            self.rel_tol * factor, self.abs_tol * factor, self.max_subdivisions, self.nodes
        )


DEFAULT = QuadratureConfig()


@functools.lru_cache(maxsize=None)
def gauss_legendre_unit(order):
    """Nodes and weights of the ``order``-point rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1.0) / 2.0, w / 2.0


@functools.lru_cache(maxsize=None)
def _tensor_rule(order, dim):
    x, w = gauss_legendre_unit(order)
    pts = np.array(list(itertools.product(x, repeat=dim))).T.reshape(dim, -1)
    wts = np.array([math.prod(c) for c in itertools.product(w, repeat=dim)])
    return pts, wts


def _eval_boxes(func, boxes, order, dim):
    """Apply the tensor rule to each (lo, hi) box with a single integrand call."""
    ref_pts, ref_w = _tensor_rule(order, dim)
    lo = np.array([b[0] for b in boxes])  # (B, dim)
    hi = np.array([b[1] for b in boxes])
    width = hi - lo
    pts = lo[:, :, None] + width[:, :, None] * ref_pts[None]  # (B, dim, K)
    flat = pts.transpose(1, 0, 2).reshape(dim, -1)
    vals = np.broadcast_to(np.asarray(func(flat), dtype=float), (flat.shape[1],))
    if not np.all(np.isfinite(vals)):
        raise DomainError("integrand is not finite at a quadrature node")
    vals = vals.reshape(len(boxes), -1)
    vols = np.prod(width, axis=1)
    return [float(vols[i] * np.dot(ref_w, vals[i])) for i in range(len(boxes))]


def _children(box):
    lo, hi = box
    mid = tuple((a + b) / 2.0 for a, b in zip(lo, hi))
    out = []
    for corner in itertools.product((0, 1), repeat=len(lo)):
        clo = tuple(lo[k] if c == 0 else mid[k] for k, c in enumerate(corner))
        chi = tuple(mid[k] if c == 0 else hi[k] for k, c in enumerate(corner))
        out.append((clo, chi))
    return out


def fixed_cubature(func, lower, upper, order):
    """Single tensor Gauss-Legendre rule of ``order`` points per axis."""
    lower, upper = tuple(map(float, lower)), tuple(map(float, upper))
    return _eval_boxes(func, [(lower, upper)], order, len(lower))[0]


def adaptive_cubature(func, lower, upper, cfg=DEFAULT):
    """Integrate ``func`` over the box ``[lower, upper]`` to the tolerances in ``cfg``.

    Raises :class:`ConvergenceError` if the box budget runs out.
    """
    lower, upper = tuple(map(float, lower)), tuple(map(float, upper))
    dim = len(lower)
    if dim == 0:
        return float(np.ravel(func(np.zeros((0, 1))))[0])
    if any(a == b for a, b in zip(lower, upper)):
        return 0.0
    order = cfg.nodes

    def refine(box):
        kids = _children(box)
        grandkids = [g for k in kids for g in _children(k)]
        vals = _eval_boxes(func, kids + grandkids, order, dim)
        nk = len(kids)
        entries = []
        for j, kid in enumerate(kids):
            fine = math.fsum(vals[nk + j * nk: nk + (j + 1) * nk])
            entries.append((kid, fine, abs(vals[j] - fine)))
        return entries

    root = (lower, upper)
    coarse = _eval_boxes(func, [root], order, dim)[0]
    kids = _children(root)
    kid_vals = _eval_boxes(func, kids, order, dim)
    total_fine = math.fsum(kid_vals)
    if abs(coarse - total_fine) <= max(cfg.abs_tol, cfg.rel_tol * abs(total_fine)):
        return total_fine

    heap = []
    counter = itertools.count()
    for box, value, err in refine(root):
        heapq.heappush(heap, (-err, next(counter), box, value))
    n_boxes = len(heap)
    run_err = math.fsum(-item[0] for item in heap)
    run_total = math.fsum(item[3] for item in heap)
    while True:
        if run_err <= max(cfg.abs_tol, cfg.rel_tol * abs(run_total)):
            # running sums drift; confirm with exact sums before stopping
            total = math.fsum(item[3] for item in heap)
            run_err = math.fsum(-item[0] for item in heap)
            run_total = total
            if run_err <= max(cfg.abs_tol, cfg.rel_tol * abs(total)):
                return total
        if n_boxes + (1 << dim) > cfg.max_subdivisions:
            raise ConvergenceError(
                f"adaptive cubature hit {cfg.max_subdivisions} subdivisions "
                f"(estimate {run_total:.16g}, error {run_err:.3e})"
            )
        # refine the worst few boxes per sweep to amortise the bookkeeping
        batch = [heapq.heappop(heap) for _ in range(max(1, min(len(heap), 8 >> dim)))]
        for neg_err, _, box, value in batch:
            if -neg_err <= 0.0:
                heapq.heappush(heap, (neg_err, next(counter), box, value))
                continue
            run_err += neg_err
            run_total -= value
            for kid, kv, ke in refine(box):
                heapq.heappush(heap, (-ke, next(counter), kid, kv))
                run_err += ke
                run_total += kv
            n_boxes += (1 << dim) - 1


def quad(func, a, b, cfg=DEFAULT):
    """One-dimensional oriented integral of a vectorised ``func(t_array)``."""
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    return sign * adaptive_cubature(lambda pts: func(pts[0]), (a,), (b,), cfg)
