"""Query parsing, join trees, decompositions and evaluators."""
from .cover import FractionalCover, agm_bound, fractional_cover, make_cover, verify_cover, within_agm
from .evaluate import (EvalStats, SizeCheck, atom_array, atom_arrays, choose_method, eval_acyclic, eval_free_connex,
                       eval_ghd, eval_semijoin_plan, evaluate, reduce_database, single_bag_ghd, to_dictionary)
from .ghd import GHD, complete_ghd, ghd_from_json, load_ghd, verify_ghd
from .jointree import (HEAD_ATOM, JoinTree, augmented_tree, check_free_connex, full_reduction, gyo, gyo_join_tree,
                       is_acyclic)
from .syntax import Atom, ConjunctiveQuery, SemijoinPlan, build_query, parse_plan, parse_query, parse_rule
from .wcoj import wcoj

__all__ = [
    "Atom", "ConjunctiveQuery", "SemijoinPlan", "build_query", "parse_plan", "parse_query", "parse_rule",
    "JoinTree", "HEAD_ATOM", "gyo", "gyo_join_tree", "is_acyclic", "augmented_tree", "check_free_connex",
    "full_reduction", "GHD", "ghd_from_json", "load_ghd", "verify_ghd", "complete_ghd",
    "FractionalCover", "fractional_cover", "make_cover", "verify_cover", "agm_bound", "within_agm",
    "EvalStats", "SizeCheck", "atom_array", "atom_arrays", "reduce_database", "eval_acyclic", "eval_free_connex",
    "eval_ghd", "single_bag_ghd", "eval_semijoin_plan", "choose_method", "evaluate", "to_dictionary", "wcoj",
]
