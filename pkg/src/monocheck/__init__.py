"""Sampled-graph checks for monotone, locally monotone and maximal monotone operators."""

__version__ = "0.1.0"

from .catalog import (CATALOG, GeneratorSpec, OperatorSpec, SamplingSpec, catalog_eval,
                      generate_random, get_operator, grid_from_text, sample_operator)
from .checkers import (DEFAULT_TOLERANCE, CheckReport, ModulusEstimate, ProbeResult,
                       check_global_monotone, check_local_monotone, check_region_monotone,
                       hypomonotonicity_modulus, local_maximality_probe, local_radius,
                       maximality_probe, segment_scan)
from .errors import (ContractError, EmptyGraphError, GenerationError, GraphFormatError,
                     GraphValidationError, MonocheckError, PreconditionError,
                     UnknownOperatorError)
from .geometry import (DomainBall, GraphPoint, NeighborhoodSpec, SampledGraph, Slice,
                       monotonicity_margin, range_query, range_query_scan)
from .graphio import load_graph, save_graph
from .paths import (PathSample, check_local_monotone_image, component_monotonicity,
                    endpoint_extremality, load_path, save_path, univariate_global_from_local)
from .varanalysis import (ConeParams, DirectionSet, PSDReport, check_max_monotone_via_coderivative,
                          coderivative_psd_check, regular_normal_directions)

__all__ = [name for name in dir() if not name.startswith("_")]
