"""Multi-material compressible ALE hydrodynamics on polygonal meshes."""

__version__ = "0.1.0"
