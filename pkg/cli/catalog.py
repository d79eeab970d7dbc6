"""
Protocol catalog: turns a validated ExperimentConfig into an evaluable instance.

Most protocols are one pipeline. Relay EQ and ∀f are products of tensor-disjoint pipelines, and
where the prover also announces classical data (GT indices, relay strings, RV directions) the
instance is a choice between the pipelines each announcement leads to.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from adversary.strategies import ProverStrategy, SeeSawOptions, StrategyKind, optimal_entangled_value
from cli.config import ONEWAY_KINDS, ONEWAY_SCHEMA, ExperimentConfig, validate
from fingerprint.oneway import (OneWayProtocol, eq_one_way, equality, exact_send_protocol, hamming_at_most,
                                majority_repeat, wrap_oneway_as_qma)
from fingerprint.scheme import FingerprintScheme
from network.compiler import compile, per_node_rejection
from network.pipeline import ProtocolPipeline
from network.sampler import simulate_sampled
from network.topology import Topology
from protocols.conversion import build_forall_f, build_from_oneway_qma, forall_f_holds
from protocols.eq import (EqPathParams, FlowDirection, TreeProtocolParams, build_eq_path, build_eq_tree,
                          eq_path_soundness_bound, eq_tree_soundness_bound)
from protocols.gt import GtParams, GtVariant, build_gt, index_domain
from protocols.relay import RelayParams, relay_segments, segment_bounds, segment_soundness_bound
from protocols.rv import build_rv
from qcore.states import StateVector
from utils.bits import all_bitstrings, to_bits
from utils.common import ConfigError, ProtocolError, check_dimension

logger = logging.getLogger(__name__)

GT_VARIANTS = {"gt": GtVariant.GT, "gt_lt": GtVariant.LT, "gt_ge": GtVariant.GE, "gt_le": GtVariant.LE}
PROVER_KINDS = {
    "honest": StrategyKind.HONEST,
    "entangled_opt": StrategyKind.ENTANGLED_OPT,
    "separable_opt": StrategyKind.SEPARABLE_OPT,
    "explicit": StrategyKind.EXPLICIT,
}


@dataclass(frozen=True)
class RunSettings:
    prover: Dict[str, Any]
    mode: Dict[str, Any]
    seed: int = 0
    threads: int = 1

    @property
    def kind(self) -> str:
        return self.prover["kind"]

    @property
    def sampled(self) -> bool:
        return self.mode["kind"] == "sample"

    @property
    def sample_seed(self) -> int:
        return self.seed if self.mode["seed"] is None else self.mode["seed"]

    def exact(self) -> "RunSettings":
        return RunSettings(self.prover, {**self.mode, "kind": "exact"}, self.seed, self.threads)


@dataclass
class Evaluation:
    accept_prob: float
    lambda_max: Optional[float]
    per_node_reject: Dict[str, float]
    proof_dim: int
    choice: Optional[str] = None


def _strategy(settings: RunSettings, model) -> ProverStrategy:
    kind = PROVER_KINDS[settings.kind]
    options = SeeSawOptions(settings.prover["restarts"], settings.prover["max_iters"], settings.prover["tol"],
                            settings.seed + settings.prover["seed"], settings.threads)
    if kind != StrategyKind.EXPLICIT:
        return ProverStrategy(kind, options)
    raw = settings.prover["amplitudes"]
    amps = np.array([complex(a[0], a[1]) if isinstance(a, list) else complex(a) for a in raw])
    if amps.shape[0] != model.proof_dimension:
        raise ConfigError(f"explicit proof has {amps.shape[0]} amplitudes, proof space has {model.proof_dimension}")
    return ProverStrategy(kind, options, StateVector(model.proof_layout, amps / np.linalg.norm(amps)))


class Single:
    def __init__(self, pipeline: ProtocolPipeline):
        self.pipeline = pipeline

    def evaluate(self, settings: RunSettings) -> Evaluation:
        model = compile(self.pipeline)
        lam = None
        if settings.kind == "entangled_opt":
            lam, proof = optimal_entangled_value(model)
        else:
            proof = _strategy(settings, model).proof(model)
        if settings.sampled:
            stats = simulate_sampled(self.pipeline, proof, settings.mode["shots"], settings.sample_seed,
                                     settings.threads)
            return Evaluation(stats.accept_frequency, lam, stats.node_reject, model.proof_dimension)
        return Evaluation(model.accept_probability(proof), lam, per_node_rejection(model, proof),
                          model.proof_dimension)


class Product:
    """Tensor-disjoint parts; all must accept, so values multiply."""

    def __init__(self, parts: Sequence[Any], labels: Sequence[str]):
        self.parts = list(parts)
        self.labels = list(labels)

    def evaluate(self, settings: RunSettings) -> Evaluation:
        if settings.kind == "explicit":
            raise ConfigError("explicit proofs are only supported for single-pipeline protocols")
        accept, lam, dim = 1.0, 1.0, 1
        rejects: Dict[str, float] = {}
        choices = []
        for label, part in zip(self.labels, self.parts):
            ev = part.evaluate(settings)
            accept *= ev.accept_prob
            lam = None if lam is None or ev.lambda_max is None else lam * ev.lambda_max
            dim *= ev.proof_dim
            rejects.update({f"{label}/{node}": p for node, p in ev.per_node_reject.items()})
            if ev.choice is not None:
                choices.append(f"{label}:{ev.choice}")
        if settings.kind != "entangled_opt":
            lam = None
        return Evaluation(accept, lam, rejects, dim, ";".join(choices) or None)


class Choice:
    """
    The prover announces one of several options (classical data every node receives).
    The honest prover takes `honest`; optimising provers take the option with the best value.
    """

    def __init__(self, options: Dict[str, Callable[[], Any]], honest: Optional[str]):
        self.options = options
        self.honest = honest
        self._built: Dict[str, Any] = {}

    def option(self, label: str):
        if label not in self._built:
            self._built[label] = self.options[label]()
        return self._built[label]

    def evaluate(self, settings: RunSettings) -> Evaluation:
        if settings.kind == "explicit":
            raise ConfigError("explicit proofs are only supported for single-pipeline protocols")
        if settings.kind == "honest":
            if self.honest is None:
                raise ProtocolError("false instance: the honest prover has nothing to announce")
            ev = self.option(self.honest).evaluate(settings)
            ev.choice = self.honest if ev.choice is None else f"{self.honest}|{ev.choice}"
            return ev
        best_label, best = None, None
        for label in self.options:
            ev = self.option(label).evaluate(settings.exact())
            if best is None or ev.accept_prob > best.accept_prob:
                best_label, best = label, ev
        logger.debug("prover announces %s (value %.12g)", best_label, best.accept_prob)
        if settings.sampled:
            best = self.option(best_label).evaluate(settings)
        best.choice = best_label if best.choice is None else f"{best_label}|{best.choice}"
        return best


@dataclass(frozen=True)
class SoundnessBound:
    formula: str
    value: float


COMPLETENESS = SoundnessBound("1 (completeness)", 1.0)


@dataclass(frozen=True)
class CatalogInstance:
    protocol: str
    instance: Any = field(repr=False)
    r: int
    n: int
    k: int
    yes: bool
    bound: Optional[SoundnessBound]

    def satisfied(self, accept_prob: float) -> Optional[bool]:
        if self.bound is None:
            return None
        if self.yes:
            return accept_prob >= self.bound.value - 1e-9
        return accept_prob <= self.bound.value + 1e-9


def scheme_for(d: dict, n: int) -> FingerprintScheme:
    try:
        return FingerprintScheme.from_dict({**d, "n": n})
    except (KeyError, TypeError) as e:
        raise ConfigError(f"bad fingerprint scheme {d}: {e}") from e


def oneway_for(d: dict, n: int) -> OneWayProtocol:
    cfg = validate(ONEWAY_SCHEMA, d, "config.params.oneway")
    if cfg["kind"] not in ONEWAY_KINDS:
        raise ConfigError(f"config.params.oneway.kind: {cfg['kind']!r} not in {list(ONEWAY_KINDS)}")
    if cfg["kind"] == "eq":
        protocol = eq_one_way(scheme_for(cfg["scheme"], n))
    elif cfg["kind"] == "hamming":
        protocol = exact_send_protocol(hamming_at_most(cfg["d"]), n)
    else:
        protocol = exact_send_protocol(equality, n)
    if cfg["majority"] > 1:
        protocol = majority_repeat(protocol, cfg["majority"])
    return protocol


def topology_for(d: dict) -> Topology:
    try:
        return Topology.from_dict(d)
    except (KeyError, TypeError) as e:
        raise ConfigError(f"bad topology {d}: {e}") from e


def _path_bound(r: int, k: int) -> SoundnessBound:
    return SoundnessBound("(1 - 4/(81 r^2))^k", eq_path_soundness_bound(r, k))


def gt_instance(p: GtParams):
    """One pipeline when the index is fixed or honest, else a choice over all indices."""
    if p.index is not None or p.variant.holds(p.x, p.y):
        return Single(build_gt(p))
    return Choice({str(i): (lambda i=i: Single(build_gt(p.with_index(i)))) for i in index_domain(p.variant, p.n)},
                  None)


def _eq_path(c: dict) -> CatalogInstance:
    p = EqPathParams(c["r"], scheme_for(c["scheme"], c["n"]), c["x"], c["y"], c["k"], c["gap"])
    yes = p.x == p.y
    bound = COMPLETENESS if yes else None if p.gap is not None else _path_bound(p.r, p.k)
    return CatalogInstance("eq_path", Single(build_eq_path(p)), p.r, c["n"], p.k, yes, bound)


def _eq_tree(c: dict) -> CatalogInstance:
    topology = topology_for(c["topology"])
    try:
        direction = FlowDirection[c["direction"].upper()]
    except KeyError:
        raise ConfigError(f"config.params.direction: {c['direction']!r} not in "
                          f"{[d.name.lower() for d in FlowDirection]}") from None
    p = TreeProtocolParams(topology, scheme_for(c["scheme"], c["n"]), k=c["k"], direction=direction)
    yes = len(set(topology.inputs.values())) == 1
    bound = COMPLETENESS if yes else SoundnessBound("(1 - 4/(81 d^2))^k, d = deepest terminal",
                                                    eq_tree_soundness_bound(topology, p.k))
    return CatalogInstance("eq_tree", Single(build_eq_tree(p)), topology.length, c["n"], p.k, yes, bound)


def _eq_relay(c: dict) -> CatalogInstance:
    scheme = scheme_for(c["scheme"], c["n"])
    relay_values = None if c["relay_values"] is None else tuple(c["relay_values"])
    p = RelayParams(c["r"], c["n"], scheme, c["x"], c["y"], c["segment_length"], c["reps_per_segment"],
                    relay_values)

    def segments(q: RelayParams) -> Product:
        parts = relay_segments(q)
        return Product([Single(pipeline) for _, _, pipeline in parts], [f"seg{a}-{z}" for a, z, _ in parts])

    if relay_values is not None or not p.relays:
        instance = segments(p)
    else:
        check_dimension(2 ** (p.n * len(p.relays)), "relay string assignments")
        options = {}
        for values in itertools.product(list(all_bitstrings(p.n)), repeat=len(p.relays)):
            options[",".join(values)] = (lambda values=values: segments(
                RelayParams(p.r, p.n, scheme, p.x, p.y, p.segment_length, p.reps_per_segment, values)))
        instance = Choice(options, ",".join(p.relay_values))
    yes = p.x == p.y
    longest = max(z - a for a, z in segment_bounds(p.r, p.segment_length))
    bound = COMPLETENESS if yes else SoundnessBound("(1 - 4/(81 L^2))^m, L = longest segment",
                                                    segment_soundness_bound(longest, p.reps_per_segment))
    return CatalogInstance("eq_relay", instance, p.r, p.n, p.reps_per_segment, yes, bound)


def _gt(protocol: str) -> Callable[[dict], CatalogInstance]:
    def build(c: dict) -> CatalogInstance:
        p = GtParams(c["r"], scheme_for(c["scheme"], c["n"]), c["x"], c["y"], c["n"], c["k"], c["index"],
                     GT_VARIANTS[protocol])
        yes = p.variant.holds(p.x, p.y)
        bound = COMPLETENESS if yes else SoundnessBound("(1 - 4/(81 r^2))^k per index",
                                                        eq_path_soundness_bound(p.r, p.k))
        return CatalogInstance(protocol, gt_instance(p), p.r, p.n, p.k, yes, bound)

    return build


def _rv(c: dict) -> CatalogInstance:
    n = c["n"]
    topo = dict(c["topology"])
    if topo.get("kind") == "star" and "inputs" not in topo:
        topo["inputs"] = [to_bits(v, n) for v in c["inputs"]]
    model = build_rv(topology_for(topo), c["inputs"], c["i"], c["j"], n, scheme_for(c["scheme"], n), c["k"])
    paths: Dict[tuple, Any] = {}

    def path(leaf: str, direction: GtVariant):
        if (leaf, direction) not in paths:
            paths[(leaf, direction)] = gt_instance(model.gt_params(leaf, direction))
        return paths[(leaf, direction)]

    def label(d) -> str:
        return ",".join(v.name.lower() for v in d)

    options = {}
    for d in model.assignments():
        if model.admissible(d):
            options[label(d)] = (lambda d=d: Product([path(leaf, v) for (leaf, _), v in zip(model.leaves, d)],
                                                     [leaf for leaf, _ in model.leaves]))
    honest = model.honest_directions()
    yes = model.holds()
    r = max(length for _, length in model.leaves)
    bound = COMPLETENESS if yes else SoundnessBound(
        "max over paths (1 - 4/(81 r_k^2))^k", max(eq_path_soundness_bound(length, c["k"]) for _, length in model.leaves))
    return CatalogInstance("rv", Choice(options, label(honest) if model.admissible(honest) else None), r, n, c["k"],
                           yes, bound)


def _forall_f(c: dict) -> CatalogInstance:
    topology = topology_for(c["topology"])
    p = TreeProtocolParams(topology, protocol=oneway_for(c["oneway"], c["n"]), k=c["k"])
    pipelines = build_forall_f(p)
    yes = forall_f_holds(p)
    instance = Product([Single(pipeline) for pipeline in pipelines], [pipeline.params["root"] for pipeline in pipelines])
    return CatalogInstance("forall_f", instance, topology.length, c["n"], c["k"], yes, COMPLETENESS if yes else None)


def _from_oneway_qma(c: dict) -> CatalogInstance:
    protocol = oneway_for(c["oneway"], c["n"])
    pipeline = build_from_oneway_qma(wrap_oneway_as_qma(protocol), c["r"], c["x"], c["y"], c["k"])
    yes = protocol.predicate(c["x"], c["y"]) if protocol.predicate is not None else c["x"] == c["y"]
    return CatalogInstance("from_oneway_qma", Single(pipeline), c["r"], c["n"], c["k"], yes,
                           COMPLETENESS if yes else None)


BUILDERS: Dict[str, Callable[[dict], CatalogInstance]] = {
    "eq_path": _eq_path,
    "eq_tree": _eq_tree,
    "eq_relay": _eq_relay,
    "rv": _rv,
    "forall_f": _forall_f,
    "from_oneway_qma": _from_oneway_qma,
    **{name: _gt(name) for name in GT_VARIANTS},
}


def build_instance(config: ExperimentConfig) -> CatalogInstance:
    instance = BUILDERS[config.protocol](config.params)
    logger.debug("built %s instance (r=%d, n=%d, k=%d, %s)", instance.protocol, instance.r, instance.n, instance.k,
                 "yes" if instance.yes else "no")
    return instance
