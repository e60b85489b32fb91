"""Geodesics on the reduced manifold, for stepping and for geometry checks.

The connection coefficients come from contracting the pseudoinverse of the
retained-constraint Jacobian with the constraints' exact Hessians; geodesics
are integrated with classical fixed-step RK4 and the endpoint is projected
back onto the manifold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    NotRegularError,
    ProjectionConfig,
    DEFAULT_PROJECTION,
    _eval_terms,
    _kernels,
    _pinv_and_null,
    jacobian,
    project_to_manifold,
    tangent_frame,
)
from .triangular import WhitneyPartition


class DivergedError(Exception):
    """The integration blew up or the endpoint could not be re-projected."""


@dataclass
class GeodesicState:
    position: np.ndarray
    velocity: np.ndarray
    time: float = 0.0


def christoffel(part: WhitneyPartition, p) -> np.ndarray:
    """Connection coefficients gamma[i, j, k] at reduced coordinates ``p``.

    Row i of the Jacobian pseudoinverse is contracted with each constraint's
    Hessian, summing over the constraint index; the result is symmetric in
    the last two slots because mixed partials commute.
    """
    J = jacobian(part, p)
    pinv, _, rank = _pinv_and_null(J)
    if rank < len(part.g_star):
        raise NotRegularError(f"Jacobian rank {rank} < {len(part.g_star)}")
    kern = _kernels(part)
    hess = kern.hessians(part)
    d = part.reduced_dim
    vals = [float(v) for v in p]
    H = np.empty((len(part.g_star), d, d))
    for c, rows in enumerate(hess):
        for a in range(d):
            for b in range(a, d):
                H[c, a, b] = H[c, b, a] = _eval_terms(rows[a][b], vals)
    return np.einsum("ic,cjk->ijk", pinv, H)


def _acceleration(part: WhitneyPartition, z: np.ndarray, v: np.ndarray) -> np.ndarray:
    gamma = christoffel(part, z)
    return -np.einsum("ijk,j,k->i", gamma, v, v)


def geodesic_integrate(
    part: WhitneyPartition,
    state0: GeodesicState,
    duration: float,
    step: float,
    cfg: ProjectionConfig = DEFAULT_PROJECTION,
    project: bool = True,
) -> GeodesicState:
    """Integrate the geodesic equation for ``duration`` with RK4 steps.

    ``step`` is the step magnitude; negative duration integrates backwards.
    The final position is projected back onto the manifold from a frame at
    the raw endpoint (``project=False`` returns the raw endpoint, useful for
    measuring integrator drift).  Raises :class:`DivergedError` if the speed
    grows a thousandfold, and propagates :class:`NotRegularError` from any
    stage.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    z = np.asarray(state0.position, dtype=float).copy()
    v = np.asarray(state0.velocity, dtype=float).copy()
    if duration == 0:
        return GeodesicState(z, v, state0.time)

    n = max(1, math.ceil(abs(duration) / step))
    h = duration / n
    v0 = math.sqrt(float(v @ v))
    for _ in range(n):
        k1z, k1v = v, _acceleration(part, z, v)
        k2z, k2v = v + 0.5 * h * k1v, _acceleration(part, z + 0.5 * h * k1z, v + 0.5 * h * k1v)
        k3z, k3v = v + 0.5 * h * k2v, _acceleration(part, z + 0.5 * h * k2z, v + 0.5 * h * k2v)
        k4z, k4v = v + h * k3v, _acceleration(part, z + h * k3z, v + h * k3v)
        z = z + (h / 6.0) * (k1z + 2 * k2z + 2 * k3z + k4z)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if v0 > 0 and math.sqrt(float(v @ v)) > 1e3 * v0:
            raise DivergedError("velocity grew by more than 1e3x")

    if not project:
        return GeodesicState(z, v, state0.time + duration)
    frame = tangent_frame(part, z)
    projected = project_to_manifold(frame, np.zeros(frame.U.shape[1]), cfg)
    if projected is None:
        raise DivergedError("endpoint could not be projected back onto the manifold")
    return GeodesicState(projected, v, state0.time + duration)
