"""Conserved and localized functionals of Zakharov states.

Global invariants of the flow:

    M = int |u|^2
    E = int ( |u_x|^2 + n |u|^2 + (n^2 + v^2)/2 )
    P = Im int ( conj(u) u_x ) + int n v

Localized counterparts use a moving C^3 partition of unity chi_k built from
an order-7 smoothstep; the chi boundaries travel at the midpoint speeds
between neighboring solitons, so M_k and P_k capture the k-th soliton's
share.  The Weinstein functional

    G = E + sum_k ( nu_k^0 M_k - c_k P_k ),   nu_k^0 = omega_k^0 + c_k^2/4,

is coercive around the modulated multi-soliton profile; its expansion in the
error eps = state - S splits exactly (pure algebra, no smallness used) into
G = G0 + G1 + G21 + G22 + G3 with G0 the profile value, G1 the first
variation, G21 the localized quadratic form at the instantaneous pulsations,
G22 the pulsation-mismatch correction, and G3 the cubic term
int eps_n |eps_u|^2.

Second-derivative-level ("modified") energies of an error triple (U, N, V)
against a reference u-profile R_u:

    H     = int ( |U_xx|^2 + (N_x)^2/2 + (V_x)^2/2 )
    G_mod = H + 2 int N |U_x|^2 + 2 Re int U (N_x conj(U_x))
              + 2 Re int R_u (N_x conj(U_x)) - 2 Re int conj(U) (R_u_x N_x)

whose controlled growth yields the higher-regularity decay diagnostics.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Grid, quadrature, sobolev_norms, spectral_derivative
from .profiles import MultiSolitonConfig, multi_soliton

__all__ = [
    "mass",
    "energy",
    "momentum",
    "smooth_step",
    "cutoff_profile_constants",
    "CutoffFamily",
    "cutoff_chi",
    "local_mass",
    "local_momentum",
    "localized_masses",
    "localized_momenta",
    "weinstein",
    "weinstein_decompose",
    "modified_energies",
    "modified_energies_vs_reference",
    "h2_error_square",
    "tail_mass",
    "state_error",
    "FunctionalReport",
    "functional_report",
    "report_columns",
    "write_report_csv",
]


def mass(state) -> float:
    return quadrature(state.grid, np.abs(state.u) ** 2)


def energy(state) -> float:
    g = state.grid
    ux = spectral_derivative(g, state.u, 1)
    dens = np.abs(ux) ** 2 + state.n * np.abs(state.u) ** 2 + 0.5 * (state.n**2 + state.v**2)
    return quadrature(g, dens)


def momentum(state) -> float:
    g = state.grid
    ux = spectral_derivative(g, state.u, 1)
    return quadrature(g, np.imag(np.conj(state.u) * ux) + state.n * state.v)


def smooth_step(s):
    """C^3 monotone step: 0 for s <= -1, 1 for s >= 1, order-7 polynomial blend.

    With t = (s+1)/2 the blend is 35 t^4 - 84 t^5 + 70 t^6 - 20 t^7; its first
    three derivatives vanish at both plateaus, and sup |d/ds| = 35/32.
    """
    t = np.clip((np.asarray(s, dtype=float) + 1.0) * 0.5, 0.0, 1.0)
    return t**4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))


def cutoff_profile_constants(n_samples: int = 400001) -> dict:
    """Measured regularity constants of the base step profile.

    The analysis wants (psi')^2 <= psi and (psi'')^2 <= C psi'; the polynomial
    step satisfies both only up to finite constants, which are measured here
    (suprema over a fine sampling of the transition interval) and reported in
    run manifests rather than assumed to be 1.
    """
    s = np.linspace(-1.0, 1.0, n_samples)
    t = (s + 1.0) * 0.5
    psi = t**4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))
    dpsi = 70.0 * t**3 * (1.0 - t) ** 3
    d2psi = 105.0 * t**2 * (1.0 - t) ** 2 * (1.0 - 2.0 * t)
    inner = (psi > 0) & (dpsi > 0)
    return {
        "sup_psi_prime": float(np.max(dpsi)),
        "sup_psi_prime_sq_over_psi": float(np.max(dpsi[psi > 0] ** 2 / psi[psi > 0])),
        "sup_psi_second_sq_over_psi_prime": float(np.max(d2psi[inner] ** 2 / dpsi[inner])),
    }


@dataclass(frozen=True)
class CutoffFamily:
    """Moving partition of unity adapted to a soliton speed ladder.

    The boundary between the k-th and (k+1)-th windows travels at the midpoint
    speed cbar = (c_k + c_{k+1})/2 and has transition half-width L:
    chi_1 = 1 - psi((x - cbar_2 t)/L), chi_K = psi((x - cbar_K t)/L), interior
    chi_k are differences of neighboring steps, so sum_k chi_k == 1 pointwise
    by telescoping.  For K = 1 there are no boundaries and chi_1 == 1.
    """

    L: float
    boundary_speeds: tuple = ()
    psi: callable = smooth_step

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("cutoff transition width L must be positive")
        speeds = tuple(float(c) for c in self.boundary_speeds)
        if list(speeds) != sorted(speeds):
            raise ValueError("cutoff boundary speeds must be sorted increasingly")
        object.__setattr__(self, "boundary_speeds", speeds)

    @classmethod
    def for_config(cls, config: MultiSolitonConfig, L: float) -> "CutoffFamily":
        c = config.speeds
        return cls(L=L, boundary_speeds=tuple(0.5 * (c[k - 1] + c[k]) for k in range(1, len(c))))

    @property
    def K(self) -> int:
        return len(self.boundary_speeds) + 1

    def chis(self, grid: Grid, t: float):
        """All K cutoffs stacked as a (K, n_points) array."""
        if self.K == 1:
            return np.ones((1, grid.n_points))
        steps = [
            self.psi(grid.wrap(grid.x - cbar * t) / self.L)
            for cbar in self.boundary_speeds
        ]
        rows = [1.0 - steps[0]]
        for a, b in zip(steps, steps[1:]):
            rows.append(a - b)
        rows.append(steps[-1])
        return np.stack(rows)


def cutoff_chi(family: CutoffFamily, k: int, t: float, grid: Grid):
    """The k-th cutoff (1-based) sampled on the grid at time t."""
    if not 1 <= k <= family.K:
        raise ValueError(f"cutoff index k={k} out of range 1..{family.K}")
    return family.chis(grid, t)[k - 1]


def local_mass(state, family: CutoffFamily, k: int) -> float:
    chi = cutoff_chi(family, k, state.t, state.grid)
    return quadrature(state.grid, np.abs(state.u) ** 2 * chi)


def local_momentum(state, family: CutoffFamily, k: int) -> float:
    g = state.grid
    chi = cutoff_chi(family, k, state.t, g)
    ux = spectral_derivative(g, state.u, 1)
    dens = np.imag(np.conj(state.u) * ux) + state.n * state.v
    return quadrature(g, dens * chi)


def localized_masses(state, family: CutoffFamily):
    """All K localized masses at once (single cutoff evaluation)."""
    chis = family.chis(state.grid, state.t)
    return np.array([quadrature(state.grid, np.abs(state.u) ** 2 * c) for c in chis])


def localized_momenta(state, family: CutoffFamily):
    g = state.grid
    ux = spectral_derivative(g, state.u, 1)
    dens = np.imag(np.conj(state.u) * ux) + state.n * state.v
    chis = family.chis(g, state.t)
    return np.array([quadrature(g, dens * c) for c in chis])


def weinstein(state, config: MultiSolitonConfig, family: CutoffFamily) -> float:
    """Energy plus pulsation/speed-weighted localized masses and momenta."""
    if family.K != config.K:
        raise ValueError(f"cutoff family has K={family.K} but config has K={config.K}")
    g = state.grid
    ux = spectral_derivative(g, state.u, 1)
    dens = np.abs(ux) ** 2 + state.n * np.abs(state.u) ** 2 + 0.5 * (state.n**2 + state.v**2)
    chis = family.chis(g, state.t)
    mom_dens = np.imag(np.conj(state.u) * ux) + state.n * state.v
    for k, p in enumerate(config.solitons):
        dens = dens + chis[k] * (p.nu * np.abs(state.u) ** 2 - p.c * mom_dens)
    return quadrature(g, dens)


def weinstein_decompose(epsilon, S, config: MultiSolitonConfig, family: CutoffFamily,
                        omegas_t=None) -> dict:
    """Exact split G(S + eps) = G0 + G1 + G21 + G22 + G3.

    epsilon and S are state triples on one grid (S the modulated profile sum,
    epsilon the remainder); S.t sets the cutoff positions.  omegas_t supplies
    the instantaneous pulsations entering G21's quadratic weights and G22's
    mismatch; when omitted they default to the reference pulsations and
    G22 == 0 (the decomposition stays usable pre-modulation).  The split is
    algebraically exact for arbitrary epsilon, which the tests exercise.
    """
    if epsilon.grid is not S.grid:
        raise ValueError("epsilon and S must share one grid")
    if family.K != config.K:
        raise ValueError(f"cutoff family has K={family.K} but config has K={config.K}")
    g = S.grid
    t = S.t
    omegas_t = np.asarray(config.omegas if omegas_t is None else omegas_t, dtype=float)
    if omegas_t.shape != (config.K,):
        raise ValueError("omegas_t must supply one pulsation per soliton")

    e_u, e_n, e_v = epsilon.u, epsilon.n, epsilon.v
    chis = family.chis(g, t)
    s_ux = spectral_derivative(g, S.u, 1)
    e_ux = spectral_derivative(g, e_u, 1)

    g0 = weinstein(S, config, family)

    # first variation of G at S in direction eps
    lin = (
        2.0 * np.real(s_ux * np.conj(e_ux))
        + 2.0 * S.n * np.real(np.conj(S.u) * e_u)
        + e_n * np.abs(S.u) ** 2
        + S.n * e_n
        + S.v * e_v
    )
    for k, p in enumerate(config.solitons):
        lin = lin + chis[k] * (
            2.0 * p.nu * np.real(np.conj(S.u) * e_u)
            - p.c * (np.imag(np.conj(e_u) * s_ux + np.conj(S.u) * e_ux)
                     + S.n * e_v + e_n * S.v)
        )
    g1 = quadrature(g, lin)

    # localized quadratic form at the instantaneous pulsations, plus the
    # profile-coupling part (linear in S, so the per-soliton sum telescopes)
    mom_dens = np.imag(np.conj(e_u) * e_ux) + e_n * e_v
    quad = 2.0 * e_n * np.real(np.conj(S.u) * e_u) + S.n * np.abs(e_u) ** 2
    g22 = 0.0
    for k, p in enumerate(config.solitons):
        nu_t = omegas_t[k] + 0.25 * p.c**2
        quad = quad + chis[k] * (
            np.abs(e_ux) ** 2 + nu_t * np.abs(e_u) ** 2
            - p.c * mom_dens + 0.5 * (e_n**2 + e_v**2)
        )
        g22 += (p.omega - omegas_t[k]) * quadrature(g, chis[k] * np.abs(e_u) ** 2)
    g21 = quadrature(g, quad)

    g3 = quadrature(g, e_n * np.abs(e_u) ** 2)
    return {"G0": g0, "G1": g1, "G21": g21, "G22": g22, "G3": g3}


def modified_energies(grid: Grid, U, N, V, r_u) -> dict:
    """Second-derivative energies of an error triple against the profile R_u.

    H is the flat H^2 x H^1 x H^1 leading part; G_mod adds the cubic
    self-interaction and the two R_u-coupling corrections that make its time
    derivative integrable along decaying trajectories.
    """
    Ux = spectral_derivative(grid, U, 1)
    Uxx = spectral_derivative(grid, U, 2)
    Nx = spectral_derivative(grid, N, 1)
    Vx = spectral_derivative(grid, V, 1)
    rux = spectral_derivative(grid, r_u, 1)

    h_val = quadrature(grid, np.abs(Uxx) ** 2 + 0.5 * Nx**2 + 0.5 * Vx**2)
    g_val = (
        h_val
        + 2.0 * quadrature(grid, N * np.abs(Ux) ** 2)
        + 2.0 * quadrature(grid, np.real(U * Nx * np.conj(Ux)))
        + 2.0 * quadrature(grid, np.real(r_u * Nx * np.conj(Ux)))
        - 2.0 * quadrature(grid, np.real(np.conj(U) * rux * Nx))
    )
    return {"H": h_val, "G_mod": g_val}


def modified_energies_vs_reference(state, config: MultiSolitonConfig) -> dict:
    """modified_energies of state - R(t) against the fixed-parameter profiles."""
    ru, rn, rv = multi_soliton(state.grid, config, state.t)
    return modified_energies(state.grid, state.u - ru, state.n - rn, state.v - rv, ru)


def h2_error_square(state, config: MultiSolitonConfig) -> float:
    """Squared H^2 x H^1 x H^1 seminorm of state - R(t) (sum of squares)."""
    g = state.grid
    ru, rn, rv = multi_soliton(g, config, state.t)
    uxx = spectral_derivative(g, state.u - ru, 2)
    nx = spectral_derivative(g, state.n - rn, 1)
    vx = spectral_derivative(g, state.v - rv, 1)
    return quadrature(g, np.abs(uxx) ** 2) + quadrature(g, nx**2) + quadrature(g, vx**2)


def state_error(state, config: MultiSolitonConfig) -> float:
    """bold-H norm of state - R(t) against the fixed-parameter profiles."""
    g = state.grid
    ru, rn, rv = multi_soliton(g, config, state.t)
    return sobolev_norms(g, state.u - ru, state.n - rn, state.v - rv)["bold_H"]


def tail_mass(state, K0: float) -> dict:
    """Mass and energy content of the region |x| > K0.

    The cut indicator gets a one-cell linear ramp at |x| = K0 (the trapezoid
    treatment of a domain boundary), which keeps the quadrature second-order
    instead of O(spacing) from a sharp step.
    """
    if not 0 < K0 < 0.5 * state.grid.box_length:
        raise ValueError("K0 must lie inside (0, box_length/2)")
    g = state.grid
    outside = np.clip((np.abs(g.x) - K0) / g.spacing + 0.5, 0.0, 1.0)
    ux = spectral_derivative(g, state.u, 1)
    e_dens = np.abs(ux) ** 2 + state.n * np.abs(state.u) ** 2 + 0.5 * (state.n**2 + state.v**2)
    return {
        "mass_tail": quadrature(g, np.abs(state.u) ** 2 * outside),
        "energy_tail": quadrature(g, e_dens * outside),
    }


@dataclass(frozen=True)
class FunctionalReport:
    """All scalar diagnostics of one snapshot (wide-format CSV row / JSON)."""

    t: float
    M: float
    E: float
    P: float
    M_k: tuple
    P_k: tuple
    G: float
    parts: dict          # G0, G1, G21, G22, G3
    modified: dict       # H, G_mod
    tails: dict          # mass_tail, energy_tail
    g22_active: bool

    def to_dict(self) -> dict:
        out = {"t": self.t, "M": self.M, "E": self.E, "P": self.P}
        for k, val in enumerate(self.M_k):
            out[f"M_{k+1}"] = val
        for k, val in enumerate(self.P_k):
            out[f"P_{k+1}"] = val
        out["G"] = self.G
        out.update(self.parts)
        out.update(self.modified)
        out.update(self.tails)
        out["g22_active"] = self.g22_active
        return out


def report_columns(K: int) -> list:
    """Stable wide-format column order for FunctionalReport CSV files."""
    cols = ["t", "M", "E", "P"]
    cols += [f"M_{k+1}" for k in range(K)]
    cols += [f"P_{k+1}" for k in range(K)]
    cols += ["G", "G0", "G1", "G21", "G22", "G3", "H", "G_mod",
             "mass_tail", "energy_tail", "g22_active"]
    return cols


def functional_report(state, config: MultiSolitonConfig, family: CutoffFamily,
                      K0: float = 5.0, omegas_t=None) -> FunctionalReport:
    """Evaluate every functional of one state against the reference profiles.

    The decomposition uses S = R(t) (fixed reference parameters) so it is
    meaningful along trajectories without running the modulation solver;
    callers with modulated parameters pass omegas_t and their own S via
    weinstein_decompose directly.
    """
    from .dynamics import State  # deferred to avoid an import cycle at load

    g = state.grid
    ru, rn, rv = multi_soliton(g, config, state.t)
    S = State(g, state.t, ru, rn, rv)
    eps = State(g, state.t, state.u - ru, state.n - rn, state.v - rv)
    parts = weinstein_decompose(eps, S, config, family, omegas_t=omegas_t)
    return FunctionalReport(
        t=state.t,
        M=mass(state),
        E=energy(state),
        P=momentum(state),
        M_k=tuple(localized_masses(state, family)),
        P_k=tuple(localized_momenta(state, family)),
        G=weinstein(state, config, family),
        parts=parts,
        modified=modified_energies(g, eps.u, eps.n, eps.v, ru),
        tails=tail_mass(state, K0),
        g22_active=omegas_t is not None,
    )


def write_report_csv(path, reports) -> list:
    """One wide CSV row per report, in the documented column order."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to write")
    K = len(reports[0].M_k)
    columns = report_columns(K)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for rep in reports:
            d = rep.to_dict()
            writer.writerow([
                repr(float(d[c])) if c != "g22_active" else str(d[c])
                for c in columns
            ])
    return columns
