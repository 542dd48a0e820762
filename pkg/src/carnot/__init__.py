"""Computations on stratified (Carnot) groups: exact structure, frames and forms,
sampled maps, sphere integrals and box-counting dimension."""

__version__ = "0.1.0"

from .algebra import (
    AlgebraSpec,
    StratifiedAlgebra,
    build_algebra,
    catalog,
    check_invariants,
    load_spec,
    loads_spec,
    resolve_group,
    validate,
)
from .dimension import BoxCountingDimension, PointCloud, anisotropic_box_count, dimension_fit, gromov_experiment
from .forms import KForm, Multivector, evaluate, maurer_cartan, span_test, theta_form, wedge
from .grid import GridMap, generate, horizontality_defect, pullback_field, vanishing_chain_check
from .group import bch_product, coframe, dilation, frame, quasi_distance, quasi_norm
from .sphere import QuadratureGrid, SphereChartAtlas, oriented_integral

__all__ = [
    "AlgebraSpec", "StratifiedAlgebra", "build_algebra", "catalog", "check_invariants", "load_spec",
    "loads_spec", "resolve_group", "validate", "BoxCountingDimension", "PointCloud",
    "anisotropic_box_count", "dimension_fit", "gromov_experiment", "KForm", "Multivector", "evaluate",
    "maurer_cartan", "span_test", "theta_form", "wedge", "GridMap", "generate", "horizontality_defect",
    "pullback_field", "vanishing_chain_check", "bch_product", "coframe", "dilation", "frame",
    "quasi_distance", "quasi_norm", "QuadratureGrid", "SphereChartAtlas", "oriented_integral",
]
