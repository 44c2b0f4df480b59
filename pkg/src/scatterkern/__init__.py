"""Reproducing kernels of de Branges type spaces built from half-plane
scattering data, with the associated unitary nodes, canonical systems and
Sturm-Liouville diagnostics."""

__version__ = "0.1.0"
