"""Cut finite element solver for the three-field Stokes problem in 2D."""

from cutstokes3f.mesh import BackgroundMesh, build_structured_mesh, dilated_bbox
from cutstokes3f.geometry import (
    AffineDomain,
    AxisBox,
    Circle,
    Classification,
    CutDecomposition,
    CutSets,
    collect_cut_sets,
    fitted_cut_sets,
)
from cutstokes3f.assembly import LinearSystem, Params, assemble_system
from cutstokes3f.solver import SingularSystemError, condition_number, solve_direct
from cutstokes3f.manufactured import ManufacturedSolution

__version__ = "0.1.0"

__all__ = [
    "AffineDomain",
    "AxisBox",
    "BackgroundMesh",
    "Circle",
    "Classification",
    "CutDecomposition",
    "CutSets",
    "LinearSystem",
    "ManufacturedSolution",
    "Params",
    "SingularSystemError",
    "assemble_system",
    "build_structured_mesh",
    "collect_cut_sets",
    "condition_number",
    "dilated_bbox",
    "fitted_cut_sets",
    "solve_direct",
]
