"""Grid and tolerance profiles shared by every numerical routine.

A profile is selected by name; the environment variable
``SCATTERKERN_PROFILE`` overrides the default choice.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace


@dataclass(frozen=True)
class GridProfile:
    """Quadrature, truncation and tolerance settings.

    Attributes
    ----------
    cutoff : float
        Half-width of the truncated real line used for oscillatory integrals.
    panels : int
        Number of Gauss-Legendre panels on the tangent-mapped line.
    order : int
        Points per Gauss-Legendre panel.
    fft_size : int
        Number of trapezoid nodes on the Cayley circle.
    basis_order : int
        Number of rational basis functions e_0 .. e_{N-1}.
    ridge : tuple of float
        Decreasing ridge schedule for regularized solves.
    tol_solver, tol_identity, tol_asym : float
        Tolerance block, ordered tol_solver < tol_identity < tol_asym.
    """

    name: str = "default"
    cutoff: float = 200.0
    panels: int = 48
    order: int = 16
    fft_size: int = 2048
    basis_order: int = 48
    ridge: tuple = (1e-2, 1e-4, 1e-6, 1e-8, 0.0)
    ridge_stop: float = 1e-6
    tol_solver: float = 1e-10
    tol_identity: float = 1e-6
    tol_asym: float = 1e-2
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for key in ("cutoff", "panels", "order", "fft_size", "basis_order"):
            if not getattr(self, key) > 0:
                raise ValueError(f"profile field {key} must be positive")
        if not (self.tol_solver < self.tol_identity < self.tol_asym):
            raise ValueError("tolerances must satisfy tol_solver < tol_identity < tol_asym")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_(self, **kw) -> "GridProfile":
        return replace(self, **kw)


PROFILES = {
    "default": GridProfile(),
    "fast": GridProfile(name="fast", cutoff=120.0, panels=32, order=12,
                        fft_size=1024, basis_order=32),
    "fine": GridProfile(name="fine", cutoff=400.0, panels=64, order=20,
                        fft_size=4096, basis_order=64),
}


def get_profile(name: str | None = None) -> GridProfile:
    """Return a named profile; ``None`` consults ``SCATTERKERN_PROFILE``."""
    if name is None:
        name = os.environ.get("SCATTERKERN_PROFILE", "default")
    try:
        return PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown profile {name!r}; known: {sorted(PROFILES)}") from None
