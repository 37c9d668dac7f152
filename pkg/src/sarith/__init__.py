"""Exact computations around finiteness properties of soluble S-arithmetic groups."""

__version__ = "0.1.0"

from .root_data import (  # noqa: F401
    FormSet, PlaceSpec, RootSystem, build_root_system, coordinate_map, kernel_subspace,
    product_form_system, restrict_forms, restricted_systems, unit_places,
)
from .cones import (  # noqa: F401
    conv_m_member, conv_mS_member, finiteness_report, is_m_tame, normal_subgroup_certificate,
    restriction_tame, sigma_bound_classify,
)
from .trees import HVertex, TreeParams, build_truncation, downhill_flow  # noqa: F401
from .complex import (  # noqa: F401
    build_slab, essential_triviality, inclusion_induced_map, kernel_slab_connectivity,
    retract_transfer, verify_witness_nontrivial, witness_sphere,
)
from .moufang import (  # noqa: F401
    extend_directed_enumeration, fixed_chamber_set, root_group, sheet_sequence_check,
    verify_covering, verify_directedness,
)
