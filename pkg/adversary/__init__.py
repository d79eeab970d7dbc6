from adversary.strategies import (ProverStrategy, SeeSawOptions, SeparableResult, StrategyKind, honest_proof,
                                  node_grouping, optimal_entangled_value, optimal_separable_value)
from adversary.dma import ClassicalDmaProtocol, truncated_eq_dma
from adversary.attacks import (AttackResult, classical_fooling_attack, entangled_no_proof_attack, prefix_bits_family,
                               separable_cut_paste_attack)
