from qcore.layout import PROVER, Register, RegisterLayout, Role
from qcore.states import DensityOperator, HermitianOperator, StateVector, partial_trace, tensor, tensor_all
from qcore.channels import MixingChannel, apply_channel, apply_channel_adjoint, single_unitary
from qcore.measures import fidelity, trace_distance
from qcore.eigen import top_eigenpair
