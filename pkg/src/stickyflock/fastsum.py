"""Evaluation of the interaction sum f_i = sum_j m_j Phi(x_i - x_j) at sorted points.

Small configurations use the exact direct sum.  Large ones with a smooth
far field (algebraic tails with beta in {1, 2, 3}, weakly singular power
laws) go through a one-dimensional black-box fast multipole method with
Chebyshev interpolation on a uniform binary tree; its relative accuracy is
around 1e-13.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .kernels import CommunicationKernel, Family, phi_primitive

__all__ = ["interaction_sum", "direct_sum", "fmm_sum", "DIRECT_LIMIT"]

DIRECT_LIMIT = 256
FMM_ORDER = 18
LEAF_SIZE = 32

# numba kernel codes
_ZERO, _CONST, _ASINH, _ATAN, _ALG3, _POWER, _TENT = range(7)


def _kernel_code(kernel: CommunicationKernel):
    """(code, p1, p2) for the numba evaluator, or None if only numpy can evaluate it."""
    fam = kernel.family
    if fam is Family.ZERO:
        return _ZERO, 0.0, 0.0
    if fam is Family.CONSTANT:
        return _CONST, kernel.c, 0.0
    if fam is Family.COMPACT_TENT:
        return _TENT, kernel.width, kernel.height
    if fam is Family.WEAKLY_SINGULAR:
        return _POWER, kernel.c / kernel.s, kernel.s
    table = {1.0: _ASINH, 2.0: _ATAN, 3.0: _ALG3}
    if kernel.beta in table:
        return table[kernel.beta], 0.0, 0.0
    return None


@njit(cache=True, inline="always")
def _Phi(code, p1, p2, r):
    a = abs(r)
    if code == _ZERO:
        v = 0.0
    elif code == _CONST:
        v = p1 * a
    elif code == _ASINH:
        v = math.asinh(a)
    elif code == _ATAN:
        v = math.atan(a)
    elif code == _ALG3:
        v = a / math.sqrt(1.0 + a * a)
    elif code == _POWER:
        v = p1 * a ** p2
    else:
        b = min(a, p1)
        v = p2 * (b - b * b / (2.0 * p1))
    return v if r >= 0.0 else -v


@njit(cache=True)
def _direct(code, p1, p2, x, m):
    n = x.size
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        xi = x[i]
        for j in range(n):
            acc += m[j] * _Phi(code, p1, p2, xi - x[j])
        out[i] = acc
    return out


def direct_sum(kernel: CommunicationKernel, x, m) -> np.ndarray:
    """Exact O(K^2) sum; the self term vanishes since Phi(0) = 0."""
    x = np.ascontiguousarray(x, dtype=float)
    m = np.ascontiguousarray(m, dtype=float)
    code = _kernel_code(kernel)
    if code is None:
        return phi_primitive(kernel, x[:, None] - x[None, :]) @ m
    return _direct(code[0], code[1], code[2], x, m)


# ---------------------------------------------------------------------------
# fast multipole method


@njit(cache=True, inline="always")
def _lagrange(y, nodes, bw, out):
    p = nodes.size
    for a in range(p):
        if y == nodes[a]:
            for b in range(p):
                out[b] = 0.0
            out[a] = 1.0
            return
    s = 0.0
    for a in range(p):
        t = bw[a] / (y - nodes[a])
        out[a] = t
        s += t
    for a in range(p):
        out[a] /= s


@njit(cache=True)
def _fmm(code, p1, p2, x, m, lo, root_w, depth, leaf_start, nodes, bw, shift, m2l):
    p = nodes.size
    nleaf = 1 << depth
    nbox = (1 << (depth + 1)) - 1
    W = np.zeros((nbox, p))
    L = np.zeros((nbox, p))
    row = np.empty(p)
    off_leaf = nleaf - 1
    wl = root_w / nleaf
    hl = 0.5 * wl

    # P2M
    for b in range(nleaf):
        c = lo + (b + 0.5) * wl
        for j in range(leaf_start[b], leaf_start[b + 1]):
            _lagrange((x[j] - c) / hl, nodes, bw, row)
            for a in range(p):
                W[off_leaf + b, a] += m[j] * row[a]

    # M2M
    for lev in range(depth - 1, 1, -1):
        off = (1 << lev) - 1
        offc = (1 << (lev + 1)) - 1
        for b in range(1 << lev):
            for ch in range(2):
                src = offc + 2 * b + ch
                for a in range(p):
                    acc = 0.0
                    for q in range(p):
                        acc += shift[ch, a, q] * W[src, q]
                    W[off + b, a] += acc

    # M2L
    offsets = np.array([-3, -2, 2, 3])
    for lev in range(2, depth + 1):
        off = (1 << lev) - 1
        nb = 1 << lev
        for b in range(nb):
            for k in range(4):
                o = offsets[k]
                if b % 2 == 0 and o == -3:
                    continue
                if b % 2 == 1 and o == 3:
                    continue
                j = b + o
                if j < 0 or j >= nb:
                    continue
                for a in range(p):
                    acc = 0.0
                    for q in range(p):
                        acc += m2l[lev, k, a, q] * W[off + j, q]
                    L[off + b, a] += acc

    # L2L
    for lev in range(2, depth):
        off = (1 << lev) - 1
        offc = (1 << (lev + 1)) - 1
        for b in range(1 << lev):
            for ch in range(2):
                dst = offc + 2 * b + ch
                for a in range(p):
                    acc = 0.0
                    for q in range(p):
                        acc += shift[ch, q, a] * L[off + b, q]
                    L[dst, a] += acc

    # L2P and P2P
    n = x.size
    out = np.zeros(n)
    for b in range(nleaf):
        c = lo + (b + 0.5) * wl
        s0 = leaf_start[max(b - 1, 0)]
        s1 = leaf_start[min(b + 2, nleaf)]
        for i in range(leaf_start[b], leaf_start[b + 1]):
            _lagrange((x[i] - c) / hl, nodes, bw, row)
            far = 0.0
            for a in range(p):
                far += L[off_leaf + b, a] * row[a]
            near = 0.0
            xi = x[i]
            for j in range(s0, s1):
                near += m[j] * _Phi(code, p1, p2, xi - x[j])
            out[i] = near + far
    return out


def _cheb_nodes(p: int):
    k = np.arange(p)
    theta = (2 * k + 1) * np.pi / (2 * p)
    nodes = np.cos(theta)
    bw = (-1.0) ** k * np.sin(theta)
    return nodes, bw


def _lagrange_matrix(y, nodes, bw):
    """Rows ell_a(y_r) for evaluation points y (numpy version)."""
    out = np.empty((y.size, nodes.size))
    for r, yy in enumerate(y):
        hit = np.nonzero(yy == nodes)[0]
        if hit.size:
            out[r] = 0.0
            out[r, hit[0]] = 1.0
            continue
        t = bw / (yy - nodes)
        out[r] = t / t.sum()
    return out


_OPS_CACHE: dict = {}


def _operators(p: int):
    if p not in _OPS_CACHE:
        nodes, bw = _cheb_nodes(p)
        shift = np.empty((2, p, p))
        for ch, sgn in enumerate((-0.5, 0.5)):
            # shift[ch][a, q] = ell_a(sgn + xi_q / 2)
            shift[ch] = _lagrange_matrix(sgn + 0.5 * nodes, nodes, bw).T
        _OPS_CACHE[p] = (nodes, bw, shift)
    return _OPS_CACHE[p]


def fmm_sum(kernel: CommunicationKernel, x, m, order: int = FMM_ORDER, leaf_size: int = LEAF_SIZE) -> np.ndarray:
    """Approximate interaction sum by the 1d Chebyshev FMM (sorted x required)."""
    x = np.ascontiguousarray(x, dtype=float)
    m = np.ascontiguousarray(m, dtype=float)
    code = _kernel_code(kernel)
    if code is None or kernel.family is Family.COMPACT_TENT:
        raise ValueError("kernel has no smooth far field for the FMM")
    n = x.size
    lo, hi = float(x[0]), float(x[-1])
    span = hi - lo
    if n < 4 * leaf_size or span <= 0.0:
        return _direct(code[0], code[1], code[2], x, m)
    depth = max(2, int(math.ceil(math.log2(n / leaf_size))))
    root_w = span * (1.0 + 1e-12) + 1e-300
    nleaf = 1 << depth
    wl = root_w / nleaf
    leaf_start = np.searchsorted(x, lo + wl * np.arange(nleaf + 1), side="left").astype(np.int64)
    leaf_start[0] = 0
    leaf_start[-1] = n
    nodes, bw, shift = _operators(order)
    m2l = np.zeros((depth + 1, 4, order, order))
    diff = nodes[:, None] - nodes[None, :]
    for lev in range(2, depth + 1):
        w = root_w / (1 << lev)
        for k, o in enumerate((-3, -2, 2, 3)):
            m2l[lev, k] = phi_primitive(kernel, -o * w + 0.5 * w * diff)
    return _fmm(code[0], code[1], code[2], x, m, lo, root_w, depth, leaf_start, nodes, bw, shift, m2l)


def interaction_sum(kernel: CommunicationKernel, x, m) -> np.ndarray:
    """sum_j m_j Phi(x_i - x_j) for sorted x; exact below DIRECT_LIMIT points."""
    x = np.asarray(x, dtype=float)
    fam = kernel.family
    if fam is Family.ZERO:
        return np.zeros_like(x)
    if x.size <= DIRECT_LIMIT:
        return direct_sum(kernel, x, m)
    if fam is Family.CONSTANT:
        m = np.asarray(m, dtype=float)
        return kernel.c * (x * math.fsum(m) - float(np.dot(m, x)))
    code = _kernel_code(kernel)
    if code is None or fam is Family.COMPACT_TENT:
        return direct_sum(kernel, x, m)
    return fmm_sum(kernel, x, m)
