"""Bar-Hillel intersection of weighted CFGs with weighted automata that have epsilon arcs."""
from .automaton import Path, Wfsa, automaton_string_weight, enumerate_paths, epsilon_closure, parse_wfsa, path_weight, path_yield
from .correspondence import bounded_join, check_strong_equivalence, check_weak_equivalence, from_pair, reconstruct_path, to_pair
from .grammar import Derivation, Wcfg, derivation_weight, derivation_yield, enumerate_derivations, grammar_string_weight_truncated, parse_wcfg
from .intersection import intersect_general, intersect_legacy, rule_family_counts, trim
from .semiring import BOOLEAN, DIVERGENT, REAL, TROPICAL, Weight, get_semiring
from .symbols import EPSILON, SBAR

__version__ = "0.1.0"
