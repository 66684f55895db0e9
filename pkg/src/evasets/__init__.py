"""Evasive sets, hypergraph containers and container-clique trees over finite fields."""
from .errors import *  # noqa: F401,F403
from .fieldcore import FieldCtx, MultiPoly, field_new, field_of_order, sample_poly, zero_locus_affine
from .geom import Flat, PointSet, count_collinear_triples, enumerate_flats, flats_meeting, incidence_profile, moment_curve, span
from .hyper import Hypergraph, collinear_triple_hypergraph, krset_hypergraph, max_independent_set_exact
from .container import ContainerParams, build_containers, verify_containers
from .cctree import CCTree, SupersatParams, build_collinear_cctree, build_krset_cctree, supersat_hypergraph, tree_stats, verify_cctree
from .evasive import EvasiveParams, chow_dim, construct_evasive, degree_schedule, is_evasive, slice_bound, twisted_degree_bound

__version__ = "0.1.0"
