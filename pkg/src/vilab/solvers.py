"""Gradient and extragradient step maps with their contraction certificates.

For F(z) = Mz + b with mu = lambda_min(sym M) and L = sigma_max(M):

* gd:  z+ = z - eta F(z); any two trajectories contract per step by at
  least sqrt(1 - 2 eta mu + eta^2 L^2) (a valid ceiling for every eta > 0,
  contractive when eta < 2 mu / L^2);
* eg:  z+ = z - eta F(z - eta F(z)); the squared per-step ratio is bounded
  by c(eta) = 2 - 2 eta mu + eta^4 L^4 - (2 eta mu + 1)(1 - 2 eta L +
  eta^2 mu^2), which dips below 1 only when mu > L/2.

Both step maps accept batched iterates of shape (..., dim) and any callable
operator that is itself batch-transparent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .domains import Domain
from .errors import NumericalError

DIVERGENCE_FACTOR = 1e6


@dataclass(eq=False)
class SolverConfig:
    method: str
    eta: float
    T: int
    projected: bool = False
    record_trajectory: bool = False

    def __post_init__(self):
        if self.method not in ("gd", "eg"):
            raise ValueError(f"method must be 'gd' or 'eg', got {self.method!r}")
        self.eta = float(self.eta)
        if self.eta <= 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        self.T = int(self.T)
        if self.T < 0:
            raise ValueError(f"T must be >= 0, got {self.T}")


@dataclass(eq=False)
class Trajectory:
    final: np.ndarray
    steps: int
    iterates: Optional[list] = None


def gd_step(F: Callable, z, eta: float, project_onto: Optional[Domain] = None):
    z = np.asarray(z, dtype=float)
    out = z - eta * np.asarray(F(z), dtype=float)
    return out if project_onto is None else project_onto.project(out)


def eg_step(F: Callable, z, eta: float, project_onto: Optional[Domain] = None):
    z = np.asarray(z, dtype=float)
    half = z - eta * np.asarray(F(z), dtype=float)
    if project_onto is not None:
        half = project_onto.project(half)
    out = z - eta * np.asarray(F(half), dtype=float)
    return out if project_onto is None else project_onto.project(out)


def run(F: Callable, domain: Domain, config: SolverConfig, z0=None) -> Trajectory:
    """Iterate the configured step map for T steps from z0 (domain center by
    default). Batched starts of shape (B, dim) advance in lockstep. Raises
    NumericalError if any iterate norm exceeds 1e6 * (1 + ||z0||)."""
    z = domain.center() if z0 is None else np.asarray(z0, dtype=float)
    if z.shape[-1] != domain.dim:
        raise ValueError(f"start point shape {z.shape} does not match domain dim {domain.dim}")
    step = gd_step if config.method == "gd" else eg_step
    target = domain if config.projected else None
    guard = DIVERGENCE_FACTOR * (1.0 + float(np.max(np.linalg.norm(z, axis=-1))))
    iterates = [z.copy()] if config.record_trajectory else None
    for t in range(config.T):
        z = step(F, z, config.eta, target)
        if float(np.max(np.linalg.norm(z, axis=-1))) > guard:
            raise NumericalError(f"iterate norm exceeded divergence guard at step {t + 1}")
        if iterates is not None:
            iterates.append(z.copy())
    return Trajectory(final=z, steps=config.T, iterates=iterates)


# ---------------------------------------------------------------------------
# contraction certificates
# ---------------------------------------------------------------------------


def _check_mu_L_eta(mu: float, L: float, eta: float) -> None:
    if not 0.0 < mu <= L:
        raise ValueError(f"need 0 < mu <= L, got mu={mu}, L={L}")
    if eta <= 0.0:
        raise ValueError(f"eta must be positive, got {eta}")


def gd_contraction_bound(mu: float, L: float, eta: float) -> float:
    """Per-step ratio ceiling sqrt(max(0, 1 - 2 eta mu + eta^2 L^2))."""
    _check_mu_L_eta(mu, L, eta)
    return math.sqrt(max(0.0, 1.0 - 2.0 * eta * mu + eta ** 2 * L ** 2))


def eg_contraction_coefficient(mu: float, L: float, eta):
    """c(eta) bounding the SQUARED extragradient per-step ratio; accepts a
    scalar or an array of etas."""
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0.0):
        raise ValueError("eta must be positive")
    if not 0.0 < mu <= L:
        raise ValueError(f"need 0 < mu <= L, got mu={mu}, L={L}")
    c = (2.0 - 2.0 * eta * mu + eta ** 4 * L ** 4
         - (2.0 * eta * mu + 1.0) * (1.0 - 2.0 * eta * L + eta ** 2 * mu ** 2))
    return float(c) if c.ndim == 0 else c


def eg_contraction_bound(mu: float, L: float, eta: float) -> float:
    _check_mu_L_eta(mu, L, eta)
    return math.sqrt(max(0.0, eg_contraction_coefficient(mu, L, eta)))


def in_gd_stability_range(eta: float, mu: float, L: float) -> bool:
    """True iff 0 < eta < 2 mu / L^2 (the range every stability bound needs)."""
    _check_mu_L_eta(mu, L, eta)
    return eta < 2.0 * mu / L ** 2


def admissible_eta(mu: float, L: float, method: str = "gd", resolution: Optional[float] = None):
    """Step sizes with a per-step ratio ceiling strictly below 1.

    gd returns the open interval (0, 2 mu / L^2) as a pair; eg returns the
    (possibly empty) array of grid points eta in (0, 1/L] with c(eta) < 1,
    grid pitch `resolution` (default 1e-4 / L). The eg set is nonempty iff
    mu > L/2.
    """
    if method == "gd":
        _check_mu_L_eta(mu, L, 1.0)
        return (0.0, 2.0 * mu / L ** 2)
    if method != "eg":
        raise ValueError(f"method must be 'gd' or 'eg', got {method!r}")
    if resolution is None:
        resolution = 1e-4 / L
    grid = np.arange(resolution, 1.0 / L + 0.5 * resolution, resolution)
    c = eg_contraction_coefficient(mu, L, grid)
    return grid[c < 1.0]


def contraction_ratio(F: Callable, z, zp, eta: float, method: str = "gd") -> float:
    """Measured one-step ratio ||G(z) - G(z')|| / ||z - z'|| for distinct z, z'."""
    z = np.asarray(z, dtype=float)
    zp = np.asarray(zp, dtype=float)
    gap = float(np.linalg.norm(z - zp))
    if gap == 0.0:
        raise ValueError("contraction ratio needs two distinct points")
    step = gd_step if method == "gd" else eg_step
    return float(np.linalg.norm(step(F, z, eta) - step(F, zp, eta))) / gap
