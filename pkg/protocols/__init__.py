from protocols.builder import PipelineBuilder
from protocols.eq import (EqPathParams, FlowDirection, TreeProtocolParams, build_eq_path, build_eq_tree,
                          eq_path_soundness_bound, eq_tree_soundness_bound)
from protocols.relay import RelayParams, build_eq_relay, relay_adversary_value, relay_segments
from protocols.gt import GtParams, GtVariant, build_gt, gt_adversary_value, gt_index_values, honest_index
from protocols.rv import RankingModel, build_rv
from protocols.conversion import build_forall_f, build_from_oneway_qma, forall_f_holds, forall_f_value
