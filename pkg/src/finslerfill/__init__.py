"""Holmes-Thompson areas and certified filling lower bounds for Finsler
metrics on the unit disc."""
from ._backend import NAME as BACKEND
from .area import AreaResult, busemann_area, ht_area, santalo_product
from .certificates import (FillingCertificate, distance_cyclic_map, lower_bound, point_of_maximum,
                           transplant_fields, verify_filling)
from .cyclic import (CyclicMapData, I_boundary, I_interior, bracket, bracket_identity_suite,
                     check_cyclic, convex_hull_area, enumerate_six_points, order_match_oracle)
from .distance import (backward_distance_field, boundary_distance_matrix, check_forward_lipschitz,
                       forward_distance_field, gradient_field)
from .mesh import build_mesh
from .metric import MetricError, metric_from_spec
from .pu import PuReport, Rp2Model, pu_check, round_boundary_I, systole_rp2, verify_pu_hypotheses

__version__ = "0.1.0"
