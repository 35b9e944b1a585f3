"""Exclusion protocols and multi-copy discrimination for orthogonal product states."""

from .gen import GeneratorParams, InfeasibleParams, gen_random
from .multicopy import DistinguishReport, distinguish_multicopy
from .orthograph import (EdgeColoring, OrthoGraph, PatternWitness, build_ortho_graph,
                         canonical_coloring, export_dot, find_mono_triangle, find_triangle_or_p4,
                         max_local_orthonormal_clique, verify_lemma3_exhaustive,
                         verify_lemma4_sampled)
from .sim import (apply_exclusion, copy_bound, outcome_distribution, simulate,
                  verify_exclusion_guarantee)
from .states import (ProductState, StateSet, SystemSignature, Tolerance, fixture, inner_product,
                     is_orthogonal_in_partite, parse_state_set, serialize_state_set)
from .synth import (SearchClassFailure, SearchExhausted, SynthesisError, bounded_protocol_search,
                    small_set_distinguisher, synthesize_bipartite_seven,
                    synthesize_multipartite_seven, synthesize_seven, synthesize_theorem3)
from .tree import REST, Leaf, Measurement, Node, SynthesisGoal, measure

__version__ = "0.1.0"
