"""Periodic pseudospectral grid: wavenumbers, derivatives, quadrature, norms.

All fields live on a uniform grid over [-box_length/2, box_length/2) with
periodic boundary conditions.  Derivatives are exact for band-limited fields
(multiplication by (ik)^order in Fourier space) and quadrature is the
trapezoid rule, which on a periodic grid is spectrally accurate.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Grid",
    "spectral_derivative",
    "quadrature",
    "sobolev_norms",
    "write_field_csv",
    "read_field_csv",
    "grid_to_json",
    "grid_from_json",
]


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic grid with precomputed spectral machinery.

    Parameters
    ----------
    n_points : int
        Number of collocation points (must be even, >= 16).
    box_length : float
        Period of the domain; points span [-box_length/2, box_length/2).

    Attributes
    ----------
    spacing : float
        Mesh width h = box_length / n_points.
    x : ndarray
        Collocation points.
    wavenumbers : ndarray
        Angular wavenumbers 2*pi*fftfreq(n, d=h), FFT ordering.
    dealias_mask : ndarray of bool
        Two-thirds-rule mask (True on retained modes).
    """

    n_points: int
    box_length: float

    def __post_init__(self):
        if self.n_points < 16 or self.n_points % 2 != 0:
            raise ValueError(f"n_points must be even and >= 16, got {self.n_points}")
        if not (self.box_length > 0):
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        h = self.box_length / self.n_points
        x = -0.5 * self.box_length + h * np.arange(self.n_points)
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=h)
        k_max = np.abs(k).max()
        mask = np.abs(k) <= (2.0 / 3.0) * k_max
        object.__setattr__(self, "spacing", h)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "wavenumbers", k)
        object.__setattr__(self, "dealias_mask", mask)

    def wrap(self, y):
        """Map coordinates to their periodic representative in [-L/2, L/2)."""
        L = self.box_length
        return (np.asarray(y) + 0.5 * L) % L - 0.5 * L


def spectral_derivative(grid: Grid, field, order: int = 1):
    """Differentiate a periodic field by Fourier multiplication with (ik)^order.

    Real input returns a real array.  Orders 1 through 4 are supported.
    """
    if not 1 <= order <= 4:
        raise ValueError(f"derivative order must be in 1..4, got {order}")
    f = np.asarray(field)
    if f.shape != grid.x.shape:
        raise ValueError("field shape does not match grid")
    df = np.fft.ifft((1j * grid.wavenumbers) ** order * np.fft.fft(f))
    if np.isrealobj(f):
        return df.real
    return df


def quadrature(grid: Grid, values) -> float:
    """Integrate over the periodic box: spacing times the ordered sum."""
    return grid.spacing * np.asarray(values).sum()


def sobolev_norms(grid: Grid, u, n, v) -> dict:
    """Sobolev norms of a state triple (u complex, n and v real).

    Returns a dict with keys H1_of_u, L2_of_n, L2_of_v, bold_H, H2_of_u,
    H1_of_n, H1_of_v.  bold_H is the *sum* of the first three (the natural
    norm on H^1 x L^2 x L^2 triples), not a root-sum-square.
    """
    ux = spectral_derivative(grid, u, 1)
    uxx = spectral_derivative(grid, u, 2)
    nx = spectral_derivative(grid, n, 1)
    vx = spectral_derivative(grid, v, 1)

    def l2sq(f):
        return quadrature(grid, np.abs(f) ** 2).real

    h1_u = np.sqrt(l2sq(u) + l2sq(ux))
    l2_n = np.sqrt(l2sq(n))
    l2_v = np.sqrt(l2sq(v))
    return {
        "H1_of_u": h1_u,
        "L2_of_n": l2_n,
        "L2_of_v": l2_v,
        "bold_H": h1_u + l2_n + l2_v,
        "H2_of_u": np.sqrt(l2sq(u) + l2sq(ux) + l2sq(uxx)),
        "H1_of_n": np.sqrt(l2sq(n) + l2sq(nx)),
        "H1_of_v": np.sqrt(l2sq(v) + l2sq(vx)),
    }


def write_field_csv(path, grid: Grid, field) -> None:
    """Dump a field as rows (x, re, im); real fields get im = 0."""
    f = np.asarray(field, dtype=complex)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "re", "im"])
        for xj, fj in zip(grid.x, f):
            writer.writerow([repr(float(xj)), repr(float(fj.real)), repr(float(fj.imag))])


def read_field_csv(path):
    """Read a (x, re, im) CSV back into (x, complex field) arrays."""
    xs, res, ims = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["x", "re", "im"]:
            raise ValueError(f"unexpected field CSV header: {header}")
        for row in reader:
            xs.append(float(row[0]))
            res.append(float(row[1]))
            ims.append(float(row[2]))
    return np.array(xs), np.array(res) + 1j * np.array(ims)


def grid_to_json(grid: Grid) -> str:
    return json.dumps({"n_points": grid.n_points, "box_length": grid.box_length})


def grid_from_json(text: str) -> Grid:
    data = json.loads(text)
    extra = set(data) - {"n_points", "box_length"}
    if extra:
        raise ValueError(f"unknown grid keys: {sorted(extra)}")
    return Grid(n_points=int(data["n_points"]), box_length=float(data["box_length"]))
