"""Soliton parameter fitting by orthogonality root-finding.

A state near a K-soliton profile is decomposed as state = S(pi) + eps with
pi = (omega_1..omega_K, sigma_1..sigma_K, gamma_1..gamma_K) chosen so that
eps_u is orthogonal to the 3K symmetry directions of each wave:

    Re int phi_{omega_k}(x_k) e^{-i Gamma_k} eps_u = 0      (omega-type)
    Re int x_k phi_{omega_k}(x_k) e^{-i Gamma_k} eps_u = 0  (sigma-type)
    Im int Lambda_{omega_k}(x_k) e^{-i Gamma_k} eps_u = 0   (gamma-type)

with x_k = x - c_k t - sigma_k and Gamma_k = c_k x/2 - c_k^2 t/4 +
omega_k^0 t + gamma_k (the reference pulsation runs the phase clock).  These
conditions are solved per snapshot by a damped Newton iteration on the 3K
residuals with a finite-difference Jacobian; along a trajectory each frame
warm-starts from the previous one and gamma is kept on a continuous branch.

The residual vector, the unknown vector, and the Jacobian all use the fixed
component order (all omega, all sigma, all gamma).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import State, Trajectory
from .grid import quadrature, sobolev_norms
from .profiles import (
    MultiSolitonConfig,
    lambda_omega,
    modulated_profile,
    phi,
    soliton_phase,
)

__all__ = [
    "pi_from_config",
    "pi_norm",
    "orthogonality_residuals",
    "ModulationResult",
    "modulate",
    "fd_jacobian",
    "leading_diagonal_constants",
    "TrackResult",
    "track",
    "write_track_csv",
]


def pi_from_config(config: MultiSolitonConfig) -> np.ndarray:
    """Reference parameter vector Pi^0 in the fixed (omega, sigma, gamma) order."""
    return np.array(
        [p.omega for p in config.solitons]
        + [p.sigma for p in config.solitons]
        + [p.gamma for p in config.solitons]
    )


def pi_norm(pi, pi0) -> float:
    """l1 distance between parameter vectors (sum of componentwise gaps)."""
    return float(np.sum(np.abs(np.asarray(pi) - np.asarray(pi0))))


def orthogonality_residuals(state, pi, config: MultiSolitonConfig, t=None) -> np.ndarray:
    """The 3K orthogonality quadratures at parameters pi.

    eps_u = u - S^u(pi) is computed internally; the return order is all
    omega-type, then all sigma-type, then all gamma-type residuals.
    """
    g = state.grid
    t = state.t if t is None else t
    K = config.K
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (3 * K,):
        raise ValueError(f"pi must have shape ({3 * K},)")
    if np.any(pi[:K] <= 0):
        raise ValueError("modulated pulsations must stay positive")

    s_u, _, _ = modulated_profile(g, config, pi, t)
    eps_u = state.u - s_u

    res = np.empty(3 * K)
    for k, p in enumerate(config.solitons):
        omega_k = pi[k]
        sigma_k = pi[K + k]
        gamma_k = pi[2 * K + k]
        center = p.c * t + sigma_k
        x_rel = g.wrap(g.x - center)
        f = phi(g, omega_k, center)
        lam = lambda_omega(g, omega_k, center)
        gam = soliton_phase(g, p.c, p.omega, gamma_k, t, center)
        w = np.exp(-1j * gam) * eps_u
        res[k] = quadrature(g, f * np.real(w))
        res[K + k] = quadrature(g, x_rel * f * np.real(w))
        res[2 * K + k] = quadrature(g, lam * np.imag(w))
    return res


@dataclass(frozen=True)
class ModulationResult:
    pi: np.ndarray
    epsilon: State
    residuals: np.ndarray
    iterations: int
    converged: bool
    epsilon_H_norm: float

    @property
    def residual_max(self) -> float:
        return float(np.max(np.abs(self.residuals)))


def fd_jacobian(state, pi, config: MultiSolitonConfig, rel_step: float = 1e-6) -> np.ndarray:
    """Forward-difference Jacobian of the residuals in the fixed order."""
    pi = np.asarray(pi, dtype=float)
    base = orthogonality_residuals(state, pi, config)
    jac = np.empty((pi.size, pi.size))
    for j in range(pi.size):
        step = rel_step * max(1.0, abs(pi[j]))
        bumped = pi.copy()
        bumped[j] += step
        jac[:, j] = (orthogonality_residuals(state, bumped, config) - base) / step
    return jac


def _result(state, pi, res, iters, converged, config):
    g = state.grid
    s_u, s_n, s_v = modulated_profile(g, config, pi, state.t)
    eps = State(g, state.t, state.u - s_u, state.n - s_n, state.v - s_v)
    norm = sobolev_norms(g, eps.u, eps.n, eps.v)["bold_H"]
    return ModulationResult(pi=pi, epsilon=eps, residuals=res, iterations=iters,
                            converged=converged, epsilon_H_norm=norm)


def modulate(state, config: MultiSolitonConfig, pi_guess=None,
             tolerance: float = 1e-10, max_iter: int = 50) -> ModulationResult:
    """Newton-solve the 3K orthogonality relations from a warm guess.

    Steps that would push a pulsation out of (0, inf) are halved up to 20
    times; if damping fails, or max_iter is exhausted with residuals above
    tolerance, the best iterate seen is returned with converged = False.
    """
    K = config.K
    pi = pi_from_config(config) if pi_guess is None else np.array(pi_guess, dtype=float)
    res = orthogonality_residuals(state, pi, config)
    best_pi, best_res = pi.copy(), res.copy()

    for it in range(max_iter):
        if np.max(np.abs(res)) <= tolerance:
            return _result(state, pi, res, it, True, config)
        jac = fd_jacobian(state, pi, config)
        try:
            delta = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            return _result(state, best_pi, best_res, it, False, config)
        scale = 1.0
        for _ in range(20):
            if np.all(pi[:K] + scale * delta[:K] > 0):
                break
            scale *= 0.5
        else:
            return _result(state, best_pi, best_res, it, False, config)
        pi = pi + scale * delta
        res = orthogonality_residuals(state, pi, config)
        if np.max(np.abs(res)) < np.max(np.abs(best_res)):
            best_pi, best_res = pi.copy(), res.copy()

    if np.max(np.abs(res)) <= tolerance:
        return _result(state, pi, res, max_iter, True, config)
    return _result(state, best_pi, best_res, max_iter, False, config)


def leading_diagonal_constants(state, config: MultiSolitonConfig, pi=None) -> dict:
    """Jacobian diagonals rescaled to the universal ground-state constants.

    At eps = 0 the residual Jacobian's diagonal blocks reduce to quadratures
    of the Q-family: the omega and gamma diagonals carry a factor
    -sqrt(1-c^2)/sqrt(omega), the sigma diagonal sqrt(1-c^2) sqrt(omega).
    Dividing those factors out recovers the dimensionless constants
    (int Q LambdaQ, int y Q Q', int Q LambdaQ) = (1, -2, 1).
    """
    if pi is None:
        pi = pi_from_config(config)
    pi = np.asarray(pi, dtype=float)
    K = config.K
    jac = fd_jacobian(state, pi, config)
    d_omega = np.empty(K)
    d_sigma = np.empty(K)
    d_gamma = np.empty(K)
    for k, p in enumerate(config.solitons):
        w = np.sqrt(1.0 - p.c**2)
        root = np.sqrt(pi[k])
        d_omega[k] = -jac[k, k] * root / w
        d_sigma[k] = jac[K + k, K + k] / (w * root)
        d_gamma[k] = -jac[2 * K + k, 2 * K + k] * root / w
    return {"d_omega": d_omega, "d_sigma": d_sigma, "d_gamma": d_gamma}


@dataclass(frozen=True)
class TrackResult:
    """Per-frame modulation along a trajectory plus finite-difference rates."""

    times: np.ndarray
    results: tuple
    pis: np.ndarray                 # (n_frames, 3K), gamma on a continuous branch
    rates: np.ndarray               # (n_frames, 3K), d(pi)/dt by finite differences
    gamma_rate_mismatch: np.ndarray  # (n_frames, K): dgamma/dt - (omega - omega^0)
    epsilon_H: np.ndarray
    converged: np.ndarray


def track(trajectory: Trajectory, config: MultiSolitonConfig,
          tolerance: float = 1e-10, max_iter: int = 50) -> TrackResult:
    """Modulate every frame, warm-starting each solve from its predecessor.

    The first frame starts from Pi^0; after a failed frame the next one
    restarts from Pi^0.  gamma components are unwrapped to the 2*pi branch
    nearest the previous frame so the rates are finite-differenceable.
    """
    K = config.K
    pi0 = pi_from_config(config)
    results = []
    guess = pi0
    prev_pi = None
    for frame in trajectory:
        res = modulate(frame, config, pi_guess=guess, tolerance=tolerance,
                       max_iter=max_iter)
        pi = res.pi.copy()
        if prev_pi is not None:
            two_pi = 2.0 * np.pi
            shift = two_pi * np.round((prev_pi[2 * K:] - pi[2 * K:]) / two_pi)
            if np.any(shift != 0.0):
                pi = pi.copy()
                pi[2 * K:] += shift
                res = ModulationResult(pi=pi, epsilon=res.epsilon,
                                       residuals=res.residuals,
                                       iterations=res.iterations,
                                       converged=res.converged,
                                       epsilon_H_norm=res.epsilon_H_norm)
        results.append(res)
        guess = pi if res.converged else pi0
        prev_pi = pi if res.converged else prev_pi

    times = np.asarray(trajectory.times)
    pis = np.stack([r.pi for r in results])
    if len(times) >= 2:
        rates = np.gradient(pis, times, axis=0)
    else:
        rates = np.zeros_like(pis)
    omega0 = np.array([p.omega for p in config.solitons])
    mismatch = rates[:, 2 * K:] - (pis[:, :K] - omega0)
    return TrackResult(
        times=times,
        results=tuple(results),
        pis=pis,
        rates=rates,
        gamma_rate_mismatch=mismatch,
        epsilon_H=np.array([r.epsilon_H_norm for r in results]),
        converged=np.array([r.converged for r in results]),
    )


def track_columns(K: int) -> list:
    cols = ["t"]
    for name in ("omega", "sigma", "gamma"):
        cols += [f"{name}_{k+1}" for k in range(K)]
    for name in ("domega_dt", "dsigma_dt", "dgamma_dt"):
        cols += [f"{name}_{k+1}" for k in range(K)]
    cols += [f"gamma_rate_mismatch_{k+1}" for k in range(K)]
    cols += ["eps_H", "residual_max", "iterations", "converged"]
    return cols


def write_track_csv(path, result: TrackResult, config: MultiSolitonConfig) -> list:
    """Parameter/rate time series in the documented column order."""
    K = config.K
    columns = track_columns(K)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for i, r in enumerate(result.results):
            row = [result.times[i]]
            row += list(result.pis[i])
            row += list(result.rates[i])
            row += list(result.gamma_rate_mismatch[i])
            row += [r.epsilon_H_norm, r.residual_max]
            row = [repr(float(x)) for x in row]
            row += [str(r.iterations), str(bool(r.converged))]
            writer.writerow(row)
    return columns
