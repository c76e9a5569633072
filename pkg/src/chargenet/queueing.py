"""Charging-station queueing: wait-window service levels and linear caps.

A station with ``eta`` chargers facing Poisson arrivals at rate ``xi`` and
exponential charging times with mean ``theta`` is an M/M/c queue.  The
service-level metric is the probability that an arriving vehicle starts
charging within a wait window ``nu``:

    zeta = 1 - C(eta, xi*theta) * exp(-(eta - xi*theta) * nu / theta)

where C is the Erlang C delay probability.  ``calibrate_slope`` converts
the nonlinear floor ``zeta >= kappa`` into a linear occupancy cap
``f <= Omega * eta`` usable inside the optimization layers.

Defaults ``theta=1, nu=0.5, kappa=0.9`` are modelling choices of this
package, not universal constants; instance files may override them.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ConfigError
from . import kernels


@dataclass
class QueueParams:
    """Station service parameters.

    Attributes:
        theta: mean charging time, in time-step units.
        nu: acceptable waiting window, same units as theta.
        kappa: required probability of starting service within nu.
    """

    theta: float = 1.0
    nu: float = 0.5
    kappa: float = 0.9

    def __post_init__(self):
        if self.theta <= 0:
            raise ConfigError("theta must be positive")
        if self.nu < 0:
            raise ConfigError("nu must be nonnegative")
        if not 0.0 < self.kappa < 1.0:
            raise ConfigError("kappa must lie in (0, 1)")


@dataclass
class SurrogateSlope:
    """Calibrated linear occupancy cap: occupancy f <= omega * eta keeps
    the service floor satisfied on the calibration grid."""

    eta: int
    omega: float
    params: QueueParams
    grid_size: int
    tol: float


def erlang_c_wait_prob(xi, eta, params):
    """P(wait <= nu) for an M/M/eta station with arrival rate xi.

    Computed in log space (log-gamma) so large charger counts do not
    overflow the factorials.  Requires stability xi * theta < eta.
    """
    if eta < 1 or int(eta) != eta:
        raise ValueError("eta must be a positive integer")
    eta = int(eta)
    if xi < 0:
        raise ValueError("arrival rate must be nonnegative")
    if xi == 0:
        return 1.0
    a = xi * params.theta
    if a >= eta:
        raise ValueError(
            "unstable queue: offered load %.6g >= %d chargers" % (a, eta)
        )
    log_a = np.log(a)
    log_top = eta * log_a - gammaln(eta + 1)
    qs = np.arange(eta)
    log_s = logsumexp(qs * log_a - gammaln(qs + 1))
    # C = top / (top + (1 - a/eta) * S), rewritten for stability
    delay_prob = 1.0 / (1.0 + (1.0 - a / eta) * np.exp(log_s - log_top))
    zeta = 1.0 - delay_prob * np.exp(-(eta - a) * params.nu / params.theta)
    return float(zeta)


def simulate_wait_prob(xi, eta, params, n_arrivals=1_000_000, seed=0, warmup=20_000):
    """Discrete-event estimate of P(wait <= nu); the independent check
    for ``erlang_c_wait_prob``.  Stream differs between the numba and
    fallback kernel paths; the statistics agree."""
    if xi <= 0:
        return 1.0
    if xi * params.theta >= eta:
        raise ValueError("unstable queue: cannot simulate steady state")
    return float(
        kernels.mmc_sim(
            float(xi), float(params.theta), float(params.nu),
            int(eta), int(n_arrivals), int(warmup), int(seed),
        )
    )


def calibrate_slope(params, eta, grid=None, tol=1e-6):
    """Largest Omega such that every grid arrival rate with implied
    occupancy f = xi * theta <= Omega * eta satisfies the service floor.

    zeta is decreasing in xi, so the predicate is monotone in Omega and
    bisection converges; ``tol`` bounds the Omega interval width.
    """
    eta = int(eta)
    if eta < 1:
        raise ConfigError("calibration needs at least one charger")
    if grid is None:
        grid = np.linspace(0.0, 0.999 * eta / params.theta, 400)[1:]
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ConfigError("calibration grid is empty")
    if np.any(grid * params.theta >= eta):
        raise ConfigError("calibration grid contains unstable arrival rates")

    def ok(omega):
        lim = omega * eta
        for xi in grid:
            if xi * params.theta <= lim:
                if erlang_c_wait_prob(xi, eta, params) < params.kappa:
                    return False
        return True

    lo, hi = 0.0, 1.0
    if ok(hi):
        lo = hi
    else:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
    return SurrogateSlope(eta=eta, omega=lo, params=params,
                          grid_size=int(grid.size), tol=tol)


def check_service_floor(f, eta, params):
    """Does steady-state occupancy ``f`` keep zeta >= kappa?  Returns
    (ok, margin) where margin = zeta - kappa (-inf when unstable)."""
    if f < 0:
        raise ValueError("occupancy must be nonnegative")
    if f == 0:
        return True, 1.0 - params.kappa
    if f >= eta:
        return False, -np.inf
    zeta = erlang_c_wait_prob(f / params.theta, eta, params)
    return zeta >= params.kappa, zeta - params.kappa
