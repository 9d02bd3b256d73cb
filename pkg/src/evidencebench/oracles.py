"""Independent ground-truth generators used by the test suite.

Two routes are provided: dense tensor-grid quadrature of the evidence
integral for models of dimension at most 3, and closed-form posterior
moments for the conjugate normal-gamma family.  Neither route shares
code with the estimators they are used to check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .core import log_sum_exp

__all__ = [
    "OracleError",
    "QuadratureGrid",
    "quadrature_log_evidence",
    "PosteriorMoments",
    "conjugate_posterior_moments",
]

MAX_QUADRATURE_DIM = 3
_GL_PANEL_ORDER = 16
_GL_PANEL_NODES, _GL_PANEL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_PANEL_ORDER)


class OracleError(ValueError):
    """Raised when an oracle is misconfigured or its self-check fails."""


def _mass_levels(n_panels: int, tail_mass: float) -> np.ndarray:
    """Prior-mass levels at which to place panel edges.

    Equal-mass panels put the whole tail into one panel whose mass then
    hugs its inner edge, which low-order Gauss-Legendre cannot resolve.
    Grading the tails so each panel spans two decades of mass keeps the
    integrand's relative variation per panel bounded; the bulk is split
    uniformly in mass with whatever panel budget remains.
    """
    left = [tail_mass]
    while left[-1] * 100.0 <= 0.02:
        left.append(left[-1] * 100.0)
    right = [1.0 - m for m in reversed(left)]
    n_bulk = max(4, n_panels - 2 * (len(left) - 1))
    bulk = np.linspace(left[-1], right[0], n_bulk + 1)
    return np.unique(np.concatenate([left, bulk, right]))


def _panel_nodes_and_weights(breaks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights over the given panel breaks."""
    nodes, weights = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(0.5 * (lo + hi) + half * _GL_PANEL_NODES)
        weights.append(half * _GL_PANEL_WEIGHTS)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product integration grid.

    bounds: per-dimension (low, high) integration limits.
    node_counts: requested nodes per dimension (at least 32 each).
    rule: "gauss-legendre" (composite, 16-point panels) or "trapezoid".
    truncation_mass_bound: allowed defect of the prior-mass self-check.
    panel_breaks: optional per-dimension panel edges for the composite
        rule; None gives uniform panels.  Edges must span the bounds.
    """

    bounds: tuple[tuple[float, float], ...]
    node_counts: tuple[int, ...]
    rule: str = "gauss-legendre"
    truncation_mass_bound: float = 1e-8
    panel_breaks: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if self.rule not in ("gauss-legendre", "trapezoid"):
            raise OracleError(f"unknown quadrature rule {self.rule!r}")
        if len(self.bounds) != len(self.node_counts):
            raise OracleError("bounds and node_counts must have equal length")
        if not 1 <= len(self.bounds) <= MAX_QUADRATURE_DIM:
            raise OracleError(
                f"grid dimension must be 1..{MAX_QUADRATURE_DIM}, got {len(self.bounds)}"
            )
        for (lo, hi), count in zip(self.bounds, self.node_counts):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise OracleError(f"invalid bounds ({lo}, {hi})")
            if count < 32:
                raise OracleError(f"need at least 32 nodes per dimension, got {count}")
        if not 0.0 < self.truncation_mass_bound < 1.0:
            raise OracleError("truncation_mass_bound must lie in (0, 1)")
        if self.panel_breaks is not None:
            if self.rule != "gauss-legendre":
                raise OracleError("panel_breaks only apply to the composite rule")
            if len(self.panel_breaks) != len(self.bounds):
                raise OracleError("panel_breaks must cover every dimension")
            for (lo, hi), edges, count in zip(self.bounds, self.panel_breaks,
                                              self.node_counts):
                arr = np.asarray(edges, dtype=float)
                if arr[0] != lo or arr[-1] != hi or np.any(np.diff(arr) <= 0):
                    raise OracleError("panel breaks must increase from low to high bound")
                if count != _GL_PANEL_ORDER * (len(arr) - 1):
                    raise OracleError(
                        f"node count {count} inconsistent with "
                        f"{len(arr) - 1} sixteen-point panels"
                    )

    @property
    def dimension(self) -> int:
        return len(self.bounds)

    def axes(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-dimension (nodes, log_weights)."""
        out = []
        for d, ((lo, hi), count) in enumerate(zip(self.bounds, self.node_counts)):
            if self.rule == "trapezoid":
                nodes = np.linspace(lo, hi, count)
                h = (hi - lo) / (count - 1)
                weights = np.full(count, h)
                weights[0] = weights[-1] = 0.5 * h
            else:
                if self.panel_breaks is not None:
                    breaks = np.asarray(self.panel_breaks[d], dtype=float)
                else:
                    n_panels = max(2, math.ceil(count / _GL_PANEL_ORDER))
                    breaks = np.linspace(lo, hi, n_panels + 1)
                nodes, weights = _panel_nodes_and_weights(breaks)
            out.append((nodes, np.log(weights)))
        return out

    @classmethod
    def for_model(
        cls,
        model,
        nodes_per_dim: int | None = None,
        rule: str = "gauss-legendre",
        truncation_mass_bound: float = 1e-8,
        tail_mass: float = 1e-10,
    ) -> "QuadratureGrid":
        """Build a grid adapted to the model's prior.

        Bounds per dimension are the union of the prior's central
        ten-standard-deviation window and its (tail_mass, 1 - tail_mass)
        quantile range; the quantile part is what keeps heavy-tailed
        marginals (for example a low-degree Student t) inside the
        truncation budget, where a pure sd window would not.  Positive
        dimensions are floored just above zero.  For the composite rule,
        panel edges are placed at equal increments of prior mass so that
        nodes concentrate where the density does.
        """
        axes = getattr(model, "prior_axes", None)
        if axes is None:
            raise OracleError(
                f"model {type(model).__name__} exposes no prior axis information"
            )
        axes = axes()
        if len(axes) > MAX_QUADRATURE_DIM:
            raise OracleError(
                f"quadrature supports dimension <= {MAX_QUADRATURE_DIM}, "
                f"model has {len(axes)}"
            )
        if nodes_per_dim is None:
            nodes_per_dim = {1: 512, 2: 256, 3: 96}[len(axes)]

        bounds, all_breaks, counts = [], [], []
        for axis in axes:
            lo = axis.quantile(tail_mass)
            hi = axis.quantile(1.0 - tail_mass)
            if axis.sd is not None and math.isfinite(axis.sd):
                lo = min(lo, axis.mean - 10.0 * axis.sd)
                hi = max(hi, axis.mean + 10.0 * axis.sd)
            if axis.positive:
                floor = abs(axis.mean) * np.finfo(float).eps
                lo = max(lo, floor if floor > 0.0 else np.finfo(float).tiny)
            bounds.append((float(lo), float(hi)))

            if rule == "gauss-legendre":
                n_panels = max(2, math.ceil(nodes_per_dim / _GL_PANEL_ORDER))
                levels = _mass_levels(n_panels, tail_mass)
                edges = np.array([axis.quantile(q) for q in levels])
                edges[0], edges[-1] = lo, hi
                edges = np.maximum.accumulate(edges)
                # Collapse numerically coincident edges, keeping the span.
                keep = np.concatenate(([True], np.diff(edges) > 0))
                edges = edges[keep]
                if len(edges) < 3:
                    edges = np.linspace(lo, hi, 3)
                all_breaks.append(tuple(float(e) for e in edges))
                counts.append(_GL_PANEL_ORDER * (len(edges) - 1))
            else:
                counts.append(nodes_per_dim)

        return cls(
            bounds=tuple(bounds),
            node_counts=tuple(counts),
            rule=rule,
            truncation_mass_bound=truncation_mass_bound,
            panel_breaks=tuple(all_breaks) if rule == "gauss-legendre" else None,
        )


def _tensor_log_integral(
    log_density: Callable[[np.ndarray], float],
    axes: Sequence[tuple[np.ndarray, np.ndarray]],
    batch: Callable[[np.ndarray], np.ndarray] | None = None,
) -> float:
    node_arrays = [a[0] for a in axes]
    logw_arrays = [a[1] for a in axes]
    meshes = np.meshgrid(*node_arrays, indexing="ij")
    points = np.column_stack([m.ravel() for m in meshes])
    logw = np.zeros(points.shape[0])
    for mesh in np.meshgrid(*logw_arrays, indexing="ij"):
        logw += mesh.ravel()
    if batch is not None:
        logv = np.asarray(batch(points), dtype=float)
    else:
        logv = np.fromiter(
            (log_density(points[i]) for i in range(points.shape[0])),
            dtype=float,
            count=points.shape[0],
        )
    finite = logv > -np.inf
    if not np.any(finite):
        return -np.inf
    return log_sum_exp(logv[finite] + logw[finite])


def quadrature_log_evidence(model, grid: QuadratureGrid | None = None) -> float:
    """Log evidence by dense tensor-grid integration of likelihood x prior.

    Runs a self-check first: the prior alone must integrate to 1 within
    the grid's truncation budget, otherwise the bounds are unsafe and an
    error is raised rather than returning a silently biased value.
    """
    if model.dimension > MAX_QUADRATURE_DIM:
        raise OracleError(
            f"quadrature supports dimension <= {MAX_QUADRATURE_DIM}, "
            f"model has {model.dimension}"
        )
    if grid is None:
        grid = QuadratureGrid.for_model(model)
    if grid.dimension != model.dimension:
        raise OracleError(
            f"grid dimension {grid.dimension} does not match model dimension {model.dimension}"
        )
    axes = grid.axes()

    prior_batch = getattr(model, "log_prior_batch", None)
    log_prior_mass = _tensor_log_integral(model.log_prior, axes, prior_batch)
    defect = abs(math.exp(log_prior_mass) - 1.0)
    if defect > grid.truncation_mass_bound:
        raise OracleError(
            "prior mass self-check failed: grid truncation too aggressive "
            f"(integrated prior mass {math.exp(log_prior_mass):.12g}, "
            f"defect {defect:.3g} > bound {grid.truncation_mass_bound:.3g})"
        )

    joint_batch = getattr(model, "log_joint_batch", None)
    return _tensor_log_integral(model.log_joint, axes, joint_batch)


class PosteriorMoments(NamedTuple):
    mean_mu: float
    var_mu: float
    mean_tau: float
    var_tau: float


def conjugate_posterior_moments(model) -> PosteriorMoments:
    """Exact posterior moments for the normal-gamma conjugate family.

    The precision posterior is gamma with the model's updated shape and
    rate; the location marginal is a scaled Student t, whose variance
    b_n / (tau_n (a_n - 1)) exists only for a_n > 1.
    """
    a_n, b_n = model.a_n, model.b_n
    mu_n, tau_n = model.mu_n, model.tau_n
    if a_n <= 1.0:
        raise OracleError(
            f"Var[mu] undefined: posterior gamma shape a_n = {a_n:.6g} must exceed 1"
        )
    return PosteriorMoments(
        mean_mu=mu_n,
        var_mu=b_n / (tau_n * (a_n - 1.0)),
        mean_tau=a_n / b_n,
        var_tau=a_n / (b_n * b_n),
    )
