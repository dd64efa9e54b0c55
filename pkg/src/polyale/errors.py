"""Exception types shared across the solver phases."""


class PolyAleError(Exception):
    """Base class for all solver errors."""


class InvalidCellError(PolyAleError):
    """A cell polygon is degenerate (non-positive area or self-intersecting)."""


class DegenerateEdgeError(PolyAleError):
    """An edge of a cell has zero length."""


class TanglingError(PolyAleError):
    """Node motion produced an invalid (folded/tangled) mesh.

    Untangling is out of scope; the run aborts when this is raised.
    """


class PositivityError(PolyAleError):
    """A density or internal energy became non-positive."""


class SingularNodeError(PolyAleError):
    """The nodal momentum matrix is singular (no impedance, no constraint)."""


class StagnationError(PolyAleError):
    """The time step collapsed below the stagnation threshold."""


class CoverageError(PolyAleError):
    """Intersection remap failed to cover a target cell: the rezoned
    displacement exceeded the one-ring donor stencil."""


class ConfigError(PolyAleError):
    """Malformed or inconsistent run configuration."""
