"""Floating-point cascade oracle for refinement masks.

Iterates the refinement operator on a dyadic grid to approximate the
refinable function, then tests polynomial reproduction empirically.  This
is the independent cross-check for the exact solvers: the two paths share
no linear algebra beyond the mask itself.

The grid iteration is node-exact whenever the dilation, the point group
and the lattice are integral and the spacing is dyadic, because every read
location is then itself a node; multilinear interpolation only enters for
genuinely off-grid reads (non-integral data) and for off-node sampling of
the finished field.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .crystal import CrystalTriple, Dilation
from .linalg import Mat
from .mask import Mask
from .multiidx import VCollection, dim_degree, enumerate_degree, eval_y

CONVERGENCE_TOL = 1e-6


class CascadeError(RuntimeError):
    """The grid iteration cannot proceed or did not behave as required."""


class GridField:
    """Sampled approximation of the refinable function on a box grid.

    data has shape (*shape, r); node j of axis i sits at lo[i] + h*j.
    Reads outside the box are zero, matching compact support.
    """

    def __init__(self, triple: CrystalTriple, h: float, lo: np.ndarray,
                 shape: tuple, data: np.ndarray, support_radius: float):
        self.triple = triple
        self.d = triple.d
        self.h = float(h)
        self.lo = np.asarray(lo, dtype=float)
        self.shape = tuple(shape)
        self.data = data
        self.r = data.shape[-1]
        self.support_radius = float(support_radius)
        self.hi = self.lo + self.h * (np.asarray(self.shape) - 1)
        self._flat = data.reshape(-1, self.r)

    def axes(self) -> list:
        return [self.lo[j] + self.h * np.arange(self.shape[j])
                for j in range(self.d)]

    def sample(self, points) -> np.ndarray:
        """Multilinear interpolation at arbitrary points, zero outside."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.d)
        plan = _interp_plan(pts, self.lo, self.h, self.shape)
        return _apply_plan(plan, self._flat)


@dataclass
class CascadeResult:
    """Final iterate plus the per-iteration sup differences; converged
    means the last difference is at most 1e-6."""

    field: GridField
    sup_diffs: tuple
    converged: bool


@dataclass
class ReproductionReport:
    """Empirical polynomial reproduction at one degree.

    C is estimated from the degree-0 sums (which must be constant);
    residual is the largest deviation of the degree-s sums from C times
    the monomial vector over the non-excluded sample points.  The two
    closed-form candidates for C, cell volume over the integral gate and
    its reciprocal, are evaluated for comparison and matched_form records
    which of them (if either) agrees with the estimate.
    """

    s: int
    C: complex
    residual: float
    tolerance: float
    verdict: bool
    excluded: int
    gate_estimate: complex
    cell_volume: float
    form_volume_over_gate: complex
    form_gate_over_volume: complex
    matched_form: str


def estimate_support(mask: Mask, dilation: Dilation) -> float:
    """Radius of a ball certain to contain every cascade iterate.

    One refinement step maps supports by x -> A^{-1} g(x) + A^{-1} R k, so
    a ball of radius rho maps into one of radius |A^{-1}| (rho + t_max)
    with t_max the largest mask translation.  The affine map is iterated
    from radius 1; the returned value doubles the stable radius as a
    safety margin.
    """
    t = mask.triple
    f = t.floats()
    t_max = 0.0
    for e, _ in mask.items():
        t_max = max(t_max, float(np.linalg.norm(f["R"] @ np.asarray(e.k,
                                                                    float))))
    a_inv = float(np.linalg.norm(np.linalg.inv(dilation.A.np().real), 2))
    rho = 1.0
    grew_every_step = True
    for _ in range(64):
        nxt = a_inv * (rho + t_max)
        if nxt <= rho:
            grew_every_step = False
        if abs(nxt - rho) <= 1e-9 * max(1.0, rho):
            rho = nxt
            break
        rho = nxt
    else:
        if grew_every_step:
            raise CascadeError("support radius estimate grew for 64 "
                               "iterations; the dilation does not contract "
                               "in the 2-norm")
    return 2.0 * max(rho, 1.0)


def _interp_plan(points: np.ndarray, lo: np.ndarray, h: float,
                 shape: tuple) -> list:
    """Per-corner (flat node index, weight) pairs for multilinear
    interpolation; out-of-box corners get weight zero."""
    d = points.shape[1]
    rel = (points - lo) / h
    base = np.floor(rel).astype(np.int64)
    frac = rel - base
    dims = np.asarray(shape)
    strides = np.ones(d, dtype=np.int64)
    for j in range(d - 2, -1, -1):
        strides[j] = strides[j + 1] * shape[j + 1]
    plan = []
    for corner in itertools.product((0, 1), repeat=d):
        idx = base + np.asarray(corner)
        w = np.ones(len(points))
        for j in range(d):
            w = w * (frac[:, j] if corner[j] else 1.0 - frac[:, j])
        valid = np.all((idx >= 0) & (idx < dims), axis=1)
        w = np.where(valid, w, 0.0)
        flat = np.where(valid, idx @ strides, 0)
        plan.append((flat, w))
    return plan


def _apply_plan(plan: list, flat_data: np.ndarray) -> np.ndarray:
    out = None
    for flat, w in plan:
        term = w[:, None] * flat_data[flat]
        out = term if out is None else out + term
    return out


def _power_direction(mask: Mask, m: int) -> np.ndarray:
    """Power limit of T = (1/m) sum of mask blocks from the flat vector;
    the iteration mirrors how the integral of the cascade evolves."""
    total = None
    for _, blk in mask.items():
        arr = blk.np()
        total = arr if total is None else total + arr
    T = total / m
    u = np.ones(mask.r, dtype=complex) / math.sqrt(mask.r)
    for _ in range(200):
        nxt = T @ u
        if np.linalg.norm(nxt - u) <= 1e-13 * (1.0 + np.linalg.norm(u)):
            u = nxt
            break
        u = nxt
    if (np.linalg.norm(u) < 1e-9
            or np.linalg.norm(T @ u - u) > 1e-6 * (1.0 + np.linalg.norm(u))):
        return np.zeros(mask.r, dtype=complex)
    return u


def _fix_phase(u: np.ndarray) -> np.ndarray:
    for x in u:
        if abs(x) > 1e-9:
            return u * (abs(x) / x)
    return u


def estimate_fhat0(mask: Mask, triple: CrystalTriple,
                   dilation: Dilation) -> Mat:
    """Unit-norm estimate of the integral direction of the cascade limit,
    for masks where the eigenvalue-1 eigenspace is not one-dimensional.
    A zero column signals that the iteration found no usable direction."""
    u = _power_direction(mask, dilation.m)
    n = np.linalg.norm(u)
    if n < 1e-9:
        return Mat.from_array(np.zeros((mask.r, 1)))
    return Mat.from_array(_fix_phase(u / n).reshape(-1, 1))


def _seed_direction(mask: Mask, dilation: Dilation) -> np.ndarray:
    from .accuracy import fhat0
    fh = fhat0(mask, dilation.m)
    if fh.status == "ok":
        u = fh.vector.np().ravel()
    else:
        u = _power_direction(mask, dilation.m)
    n = np.linalg.norm(u)
    if n < 1e-12:
        return np.ones(mask.r, dtype=complex) / math.sqrt(mask.r)
    return _fix_phase(u / n)


def _node_points(lo: np.ndarray, h: float, shape: tuple) -> np.ndarray:
    axes = [lo[j] + h * np.arange(shape[j]) for j in range(len(shape))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _build_plans(mask: Mask, dilation: Dilation, nodes: np.ndarray,
                 lo: np.ndarray, h: float, shape: tuple) -> list:
    """One interpolation plan per mask element for the read locations
    gamma^{-1}(A x) = g^{-1}(A x) - R k over all nodes x."""
    t = mask.triple
    f = t.floats()
    Af = dilation.A.np().real
    plans = []
    for e, blk in mask.items():
        g_inv = f["group"][t.inverse_table[e.g]]
        shift = f["R"] @ np.asarray(e.k, dtype=float)
        target = nodes @ (g_inv @ Af).T - shift
        plans.append((_interp_plan(target, lo, h, shape),
                      blk.np().T.copy()))
    return plans


def cascade_iterate(mask: Mask, triple: CrystalTriple, dilation: Dilation,
                    iterations: int, spacing: float | None = None,
                    grid_exponent: int | None = None) -> CascadeResult:
    """Iterate f -> sum_gamma d_gamma f(gamma^{-1}(A x)) on a node grid.

    The seed is the indicator of the unit box [0,1)^d times the normalized
    integral direction, so the integral starts in the right eigenspace.
    Non-convergence (last sup difference above 1e-6) is reported in the
    result, not raised.
    """
    if triple is not mask.triple or dilation.triple is not triple:
        raise ValueError("mask, triple and dilation must match")
    if iterations < 1:
        raise ValueError("need at least one iteration")
    if spacing is not None:
        h = float(spacing)
        if h <= 0:
            raise ValueError("spacing must be positive")
    else:
        q = 8 if grid_exponent is None else int(grid_exponent)
        h = 2.0 ** -q
    d = triple.d
    radius = estimate_support(mask, dilation)
    n_side = int(math.ceil(radius / h))
    lo = np.full(d, -n_side * h)
    shape = (2 * n_side + 1,) * d
    nodes = _node_points(lo, h, shape)
    seed = _seed_direction(mask, dilation)
    inside = np.all((nodes >= -1e-12) & (nodes < 1.0 - 1e-12), axis=1)
    data = np.zeros((len(nodes), mask.r), dtype=complex)
    data[inside] = seed
    plans = _build_plans(mask, dilation, nodes, lo, h, shape)
    sup_diffs = []
    for _ in range(iterations):
        nxt = None
        for plan, d_t in plans:
            term = _apply_plan(plan, data) @ d_t
            nxt = term if nxt is None else nxt + term
        if nxt is None:
            nxt = np.zeros_like(data)
        sup_diffs.append(float(np.max(np.abs(nxt - data))))
        data = nxt
    field = GridField(triple, h, lo, shape,
                      data.reshape(*shape, mask.r), radius)
    return CascadeResult(field, tuple(sup_diffs),
                         sup_diffs[-1] <= CONVERGENCE_TOL)


def refinement_residual(field: GridField, mask: Mask,
                        dilation: Dilation) -> float:
    """Largest node defect of the refinement equation for the field: the
    sup difference between the field and one more refinement step."""
    nodes = _node_points(field.lo, field.h, field.shape)
    plans = _build_plans(mask, dilation, nodes, field.lo, field.h,
                         field.shape)
    nxt = None
    for plan, d_t in plans:
        term = _apply_plan(plan, field._flat) @ d_t
        nxt = term if nxt is None else nxt + term
    return float(np.max(np.abs(nxt - field._flat)))


def sample_points(field: GridField, count: int = 32,
                  seed: int = 2026) -> np.ndarray:
    """Random grid nodes in the central unit cell, keeping a margin of
    support_radius * h from the cell boundary.

    Nodes rather than arbitrary points: at a node every lattice translate
    is read node-exactly, so the comparison measures the cascade itself
    and not the interpolation of the target polynomial between nodes.
    """
    rng = np.random.default_rng(seed)
    margin = field.support_radius * field.h
    axes = field.axes()
    eligible = []
    for ax in axes:
        ok = np.where((ax >= margin - 1e-12) & (ax < 1.0 - margin + 1e-12))[0]
        if len(ok) == 0:
            raise CascadeError("grid too coarse for the sampling margin")
        eligible.append(ok)
    sizes = [len(ok) for ok in eligible]
    total = int(np.prod(sizes))
    take = min(count, total)
    picks = rng.choice(total, size=take, replace=False)
    coords = np.empty((take, field.d))
    for row, flat in enumerate(picks):
        rest = int(flat)
        for j in range(field.d - 1, -1, -1):
            rest, pos = divmod(rest, sizes[j])
            coords[row, j] = axes[j][eligible[j][pos]]
    return coords


def _gamma_cover(field: GridField, xmax: float) -> list:
    """Group elements gamma with gamma(sample region) possibly meeting the
    field box; everything else reads zero."""
    t = field.triple
    f = t.floats()
    r_inv = np.linalg.inv(f["R"])
    half = float(np.max(np.abs(np.stack([field.lo, field.hi]))))
    reach = math.sqrt(t.d) * (half + xmax)
    K = int(math.ceil(float(np.max(np.sum(np.abs(r_inv), axis=1))) * reach))
    rng = range(-K, K + 1)
    return [t.element(g, k) for g in range(t.order)
            for k in itertools.product(rng, repeat=t.d)]


def reproduction_values(field: GridField, v: VCollection, s: int,
                        points) -> tuple:
    """Degree-s reproduction sums G_[s](x) = sum_gamma y_[s](gamma)
    f(gamma(x)) at the given points.

    Returns (values (N, d_s), excluded) where excluded marks points with a
    translate that lands near the support but off the grid box, so their
    sum is truncated.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, field.d)
    t = field.triple
    f = t.floats()
    vv = v.to_float() if v.backend == "exact" else v
    xmax = float(np.max(np.linalg.norm(pts, axis=1))) if len(pts) else 0.0
    out = np.zeros((len(pts), dim_degree(field.d, s)), dtype=complex)
    excluded = np.zeros(len(pts), dtype=bool)
    eps = 1e-9
    for e in _gamma_cover(field, xmax):
        g = f["group"][e.g]
        shift = f["R"] @ np.asarray(e.k, dtype=float)
        target = (pts + shift) @ g.T
        outside = np.any((target < field.lo - eps)
                         | (target > field.hi + eps), axis=1)
        if outside.all():
            near = (np.linalg.norm(target, axis=1)
                    <= field.support_radius + field.h)
            excluded |= near
            continue
        near = (np.linalg.norm(target, axis=1)
                <= field.support_radius + field.h)
        excluded |= (outside & near)
        vals = field.sample(target)
        y = eval_y(e, vv, s).np()
        out += vals @ y.T
    return out, excluded


def _monomial_matrix(pts: np.ndarray, s: int) -> np.ndarray:
    cols = [np.prod(pts ** np.asarray(alpha), axis=1)
            for alpha in enumerate_degree(pts.shape[1], s)]
    return np.stack(cols, axis=1)


def reproduce(field: GridField, v: VCollection, s: int, sample_points,
              tol: float = 1e-5) -> ReproductionReport:
    """Test G_[s] = C X_[s] on the sample points, with C estimated from
    the degree-0 sums (exact reproduction makes those constant)."""
    pts = np.asarray(sample_points, dtype=float).reshape(-1, field.d)
    g0, ex0 = reproduction_values(field, v, 0, pts)
    if s == 0:
        gs, exs = g0, ex0
    else:
        gs, exs = reproduction_values(field, v, s, pts)
    excluded = ex0 | exs
    keep = ~excluded
    if not keep.any():
        raise CascadeError("every sample point lost coverage; enlarge the "
                           "grid or shrink the sample region")
    C = complex(np.mean(g0[keep, 0]))
    target = C * _monomial_matrix(pts[keep], s)
    residual = float(np.max(np.abs(gs[keep] - target)))

    # closed-form candidates for C from the field integral
    integral = field._flat.sum(axis=0) * field.h ** field.d
    v0 = (v.block(0).to_float() if v.backend == "exact"
          else v.block(0)).np().ravel()
    gate = complex(np.dot(v0, integral))
    det_r = abs(np.linalg.det(field.triple.floats()["R"]))
    vol = det_r / field.triple.order
    form_vg = vol / gate if abs(gate) > 1e-12 else complex("inf")
    form_gv = gate / vol
    matches = []
    for name, val in (("volume-over-gate", form_vg),
                      ("gate-over-volume", form_gv)):
        if abs(val - C) <= 1e-2 * max(1.0, abs(C)):
            matches.append(name)
    matched = " and ".join(matches) if matches else "neither"
    return ReproductionReport(
        s=s, C=C, residual=residual, tolerance=tol,
        verdict=bool(residual < tol), excluded=int(excluded.sum()),
        gate_estimate=gate, cell_volume=vol,
        form_volume_over_gate=form_vg, form_gate_over_volume=form_gv,
        matched_form=matched)


def _probe_block(field: GridField, v: VCollection | None, s: int,
                 pts: np.ndarray, C: complex) -> tuple:
    """Best-fitting degree-s block given the lower blocks: least squares
    for v_[s] in G_[s] = C X_[s].  Returns (residual, extended v, C).

    With no blocks at all (solver accuracy 0) the degree-0 row itself is
    fitted against the constant 1, fixing the scale.
    """
    from .multiidx import build_Q_tilde
    t = field.triple
    f = t.floats()
    d_s = dim_degree(field.d, s)
    r = field.r
    xmax = float(np.max(np.linalg.norm(pts, axis=1))) if len(pts) else 0.0
    gammas = _gamma_cover(field, xmax)
    n = len(pts)

    base = np.zeros((n, d_s), dtype=complex)
    design = np.zeros((n, d_s, d_s * r), dtype=complex)
    for e in gammas:
        g = f["group"][e.g]
        shift = f["R"] @ np.asarray(e.k, dtype=float)
        vals = field.sample((pts + shift) @ g.T)
        if v is not None:
            partial = None
            for tt in range(min(s, v.p)):
                q = build_Q_tilde(e, s, tt).to_float().np()
                term = vals @ (q @ v.block(tt).to_float().np()
                               if v.backend == "exact"
                               else q @ v.block(tt).np()).T
                partial = term if partial is None else partial + term
            if partial is not None:
                base += partial
        q_ss = build_Q_tilde(e, s, s).to_float().np()
        # unknown W is d_s x r; the gamma term is q_ss @ W @ vals[x]
        design += np.einsum("ab,nc->nabc", q_ss, vals).reshape(n, d_s,
                                                               d_s * r)
    if C is None:
        target = np.ones((n, 1), dtype=complex)
    else:
        target = C * _monomial_matrix(pts, s)
    lhs = design.reshape(n * d_s, d_s * r)
    rhs = (target - base).reshape(n * d_s)
    sol, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    fit = (design @ sol).reshape(n, d_s)
    residual = float(np.max(np.abs(base + fit - target)))
    block = Mat.from_array(sol.reshape(d_s, r))
    if v is None:
        new_v = VCollection(field.d, (block,))
        new_c = complex(1.0)
    else:
        new_v = (v.to_float() if v.backend == "exact" else v).extended(block)
        new_c = C
    return residual, new_v, new_c


def empirical_accuracy(mask: Mask, triple: CrystalTriple, dilation: Dilation,
                       p_max: int, iterations: int = 12,
                       grid_exponent: int = 8, tolerance: float = 1e-5,
                       sample_count: int = 32, seed: int = 2026,
                       strict: bool = True) -> int:
    """Brute-force accuracy estimate from the cascade field.

    Witness blocks from the exact solver drive the reproduction test for
    the degrees the solver certifies; past them, each degree gets its
    best-fitting block (least squares), so a failure is a failure of every
    possible extension, not of one candidate.  Returns the largest s+1 at
    or below p_max with all residuals under the tolerance.  With strict,
    cascade non-convergence raises; otherwise the divergent field speaks
    for itself through the residuals.
    """
    from .accuracy import max_accuracy
    cert = max_accuracy(mask, triple, dilation, p_max)
    result = cascade_iterate(mask, triple, dilation, iterations,
                             grid_exponent=grid_exponent)
    if not result.converged and strict:
        raise CascadeError("cascade did not converge: last sup difference "
                           f"{result.sup_diffs[-1]:.3g}")
    field = result.field
    pts = sample_points(field, sample_count, seed)
    v = cert.witness.to_float() if cert.witness is not None else None
    C = None
    level = 0
    for s in range(p_max):
        if v is not None and s < v.p:
            rep = reproduce(field, v, s, pts, tol=tolerance)
            if s == 0:
                C = rep.C
            ok = rep.verdict
        else:
            residual, v, C = _probe_block(field, v, s, pts, C)
            ok = residual < tolerance
        if not ok:
            break
        level = s + 1
    return level
