from network.topology import Topology, TopologyKind, path_node, path_topology, spanning_tree, star_topology, tree_topology
from network.pipeline import ClassicalGuard, LocalTest, Message, PreparedState, ProtocolPipeline, split_components
from network.compiler import AcceptanceModel, LocalOperator, compile, compile_factored, group_operator, per_node_rejection
from network.sampler import SampledStatistics, simulate_sampled
