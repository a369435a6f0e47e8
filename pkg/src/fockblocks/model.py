"""Model configuration, momentum discretization, and cutoff kernels.

The continuum model lives on R^d; here momentum space is replaced by a finite
lattice symmetric under negation, delta functions by Kronecker deltas over
lattice weight, and integrals by weighted sums.  The lattice weight h^d is
absorbed once into the kernel matrices so that every downstream formula reads
like its continuum counterpart.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, asdict
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError


def dispersion_a(q, m_b: float):
    """Relativistic boson dispersion sqrt(|q|^2 + m_b^2)."""
    return np.sqrt(_sq(q) + m_b**2)


def dispersion_b(k, m_f: float):
    """Relativistic fermion dispersion sqrt(|k|^2 + m_f^2)."""
    return np.sqrt(_sq(k) + m_f**2)


def _sq(v: np.ndarray):
    """Squared euclidean length along the last axis; scalars pass through."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return v**2
    return np.sum(v**2, axis=-1)


# --- cutoff profiles ----------------------------------------------------------


def chi_indicator(v: np.ndarray) -> np.ndarray:
    """Indicator of the closed unit box; equals 1 near 0, compact support."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    return (np.max(np.abs(v), axis=-1) <= 1.0).astype(float)


def chi_cos_bump(v: np.ndarray) -> np.ndarray:
    """Smooth bump cos^2(pi t / 2) of the sup-norm t, clamped outside the box."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    t = np.minimum(np.max(np.abs(v), axis=-1), 1.0)
    out = np.cos(0.5 * np.pi * t) ** 2
    out[np.max(np.abs(v), axis=-1) > 1.0] = 0.0
    return out


def g_ball_indicator(v: np.ndarray) -> np.ndarray:
    """Indicator of the open unit euclidean ball."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    return (np.sqrt(np.sum(v**2, axis=-1)) < 1.0).astype(float)


CHI_PROFILES = {"indicator": chi_indicator, "cos_bump": chi_cos_bump}
G_PROFILES = {"ball_indicator": g_ball_indicator}


# --- momentum grid --------------------------------------------------------------


@dataclass(frozen=True)
class MomentumGrid:
    """Finite set of lattice momenta, symmetric under negation.

    points has shape (n_modes, d); each point must lie on spacing * Z^d.  Both
    the boson and the fermion field share the grid.
    """

    points: np.ndarray
    spacing: float

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ConfigError("grid needs at least one point of shape (n, d)")
        if self.spacing <= 0:
            raise ConfigError("grid spacing must be positive")
        ratios = pts / self.spacing
        if not np.allclose(ratios, np.round(ratios), atol=1e-9):
            raise ConfigError("grid points must lie on spacing * Z^d")
        keys = {tuple(np.round(p / self.spacing).astype(int)) for p in pts}
        if len(keys) != pts.shape[0]:
            raise ConfigError("grid points must be distinct")
        neg = {tuple(-np.array(k)) for k in keys}
        if neg != keys:
            raise ConfigError("grid must be symmetric under negation")
        order = np.lexsort(pts.T[::-1])
        object.__setattr__(self, "points", pts[order])

    @classmethod
    def lattice(cls, spacing: float, halfwidth: float, d: int = 1) -> "MomentumGrid":
        """All of spacing * Z^d inside the box [-halfwidth, halfwidth]^d."""
        if halfwidth < 0:
            raise ConfigError("grid halfwidth must be >= 0")
        m = int(np.floor(halfwidth / spacing + 1e-12))
        axis = np.arange(-m, m + 1) * spacing
        pts = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
        return cls(pts, spacing)

    @property
    def n_modes(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def weight(self) -> float:
        """Quadrature weight h^d of a single lattice cell."""
        return self.spacing**self.d


# --- configuration --------------------------------------------------------------


def _parse_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"complex values are [re, im], got {value!r}")
        return complex(value[0], value[1])
    return complex(value)


def _json_complex(z: complex):
    if z.imag == 0.0:
        return z.real
    return [z.real, z.imag]


@dataclass
class ModelConfig:
    """All model and discretization parameters.

    JSON keys mirror the field names verbatim.  Coupling strengths h1, h2 are
    the constant values of the bounded kernel factors; grid_points, when
    given, selects an explicit symmetric subset of the lattice instead of the
    full box.
    """

    d: int = 1
    m_b: float = 1.0
    m_f: float = 1.0
    p: float = 0.5
    grid_spacing: float = 0.4
    grid_halfwidth: float = 0.4
    boson_max: int = 2
    h1: complex = 1.0
    h2: complex = 1.0
    g_choice: str = "ball_indicator"
    chi_choice: str = "indicator"
    Lambda: float = 1.0
    z: complex = -2.0 + 0.0j
    grid_points: Optional[Sequence] = None

    def validate(self) -> "ModelConfig":
        if self.d < 1:
            raise ConfigError("spatial dimension d must be >= 1")
        if self.m_b <= 0 or self.m_f <= 0:
            raise ConfigError("both masses must be strictly positive")
        if self.grid_spacing <= 0 or self.grid_halfwidth <= 0:
            raise ConfigError("grid spacing and halfwidth must be positive")
        if self.boson_max < 0:
            raise ConfigError("boson_max must be >= 0")
        if self.Lambda <= 0:
            raise ConfigError("Lambda must be strictly positive")
        if self.chi_choice not in CHI_PROFILES:
            raise ConfigError(f"unknown chi profile {self.chi_choice!r}")
        if self.g_choice not in G_PROFILES:
            raise ConfigError(f"unknown g profile {self.g_choice!r}")
        z = _parse_complex(self.z)
        if z.real > 0:
            raise ConfigError("spectral parameter needs Re z <= 0")
        if self.p <= self.d / 2 - 1:
            warnings.warn(
                f"kernel exponent p={self.p} is at or below d/2 - 1; "
                "renormalizability threshold not met",
                stacklevel=2,
            )
        return self

    def grid(self) -> MomentumGrid:
        if self.grid_points is not None:
            return MomentumGrid(np.asarray(self.grid_points, dtype=float).reshape(-1, self.d), self.grid_spacing)
        return MomentumGrid.lattice(self.grid_spacing, self.grid_halfwidth, self.d)

    @property
    def z_complex(self) -> complex:
        return _parse_complex(self.z)

    @property
    def h1_complex(self) -> complex:
        return _parse_complex(self.h1)

    @property
    def h2_complex(self) -> complex:
        return _parse_complex(self.h2)

    @classmethod
    def from_json(cls, payload) -> "ModelConfig":
        if isinstance(payload, (str, bytes)):
            try:
                payload = json.loads(payload)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(payload, dict):
            raise ConfigError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**payload)
        return cfg.validate()

    @classmethod
    def from_file(cls, path) -> "ModelConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_json(text)

    def to_json(self) -> dict:
        data = asdict(self)
        data["z"] = _json_complex(self.z_complex)
        data["h1"] = _json_complex(self.h1_complex)
        data["h2"] = _json_complex(self.h2_complex)
        if data["grid_points"] is not None:
            data["grid_points"] = np.asarray(self.grid_points, dtype=float).reshape(-1, self.d).tolist()
        return data


# --- kernels ---------------------------------------------------------------------


@dataclass(frozen=True)
class KernelSet:
    """Discrete interaction kernels with the lattice weight absorbed.

    g1[i, j] couples fermion mode k_i to boson mode q_j through g(k - q);
    g2 through g(k + q).  Entries carry h^d so mode sums realize the momentum
    integrals.
    """

    g1: np.ndarray
    g2: np.ndarray

    def __post_init__(self):
        if self.g1.shape != self.g2.shape:
            raise ConfigError("kernel matrices must share one (fermion, boson) shape")

    def for_signature(self, sig) -> np.ndarray:
        """Coupling matrix attached to each interaction term."""
        from .signatures import Signature

        table = {
            Signature.AB_STAR: self.g1,
            Signature.ASTAR_B: np.conj(self.g1),
            Signature.ASTAR_BSTAR: self.g2,
            Signature.AB: np.conj(self.g2),
        }
        return table[sig]


def build_kernels(cfg: ModelConfig, grid: Optional[MomentumGrid] = None) -> KernelSet:
    """Assemble the two coupling matrices on the grid.

    Any real exponent p is accepted; validate() warns below the
    renormalizability threshold p > d/2 - 1.
    """
    cfg.validate()
    if grid is None:
        grid = cfg.grid()
    chi = CHI_PROFILES[cfg.chi_choice]
    g = G_PROFILES[cfg.g_choice]
    pts = grid.points
    k = pts[:, None, :]  # fermion momentum, first index
    q = pts[None, :, :]  # boson momentum, second index
    omega_q = dispersion_a(pts, cfg.m_b)  # (n_modes,)
    cut = chi(pts / cfg.Lambda)  # (n_modes,)
    envelope = (omega_q**-cfg.p)[None, :] * cut[:, None] * cut[None, :] * grid.weight
    diff = (k - q).reshape(-1, grid.d)
    summ = (k + q).reshape(-1, grid.d)
    n = grid.n_modes
    g1 = cfg.h1_complex * g(diff).reshape(n, n) * envelope
    g2 = cfg.h2_complex * g(summ).reshape(n, n) * envelope
    return KernelSet(g1.astype(complex), g2.astype(complex))
