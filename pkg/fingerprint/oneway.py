import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import binom

from fingerprint.scheme import FingerprintScheme
from qcore.eigen import top_eigenpair
from qcore.layout import RegisterLayout
from qcore.operators import contract_vector
from qcore.states import HermitianOperator
from utils.bits import bits_index, check_bits, hamming
from utils.common import ProtocolError, check_dimension

logger = logging.getLogger(__name__)

Predicate = Callable[[str, str], bool]


def equality(x: str, y: str) -> bool:
    return x == y


def hamming_at_most(d: int) -> Predicate:
    def predicate(x: str, y: str) -> bool:
        return hamming(x, y) <= d
    predicate.__name__ = f"ham_le_{d}"
    return predicate


@dataclass(frozen=True)
class OneWayProtocol:
    """
    One-way protocol: Alice sends message(x), Bob measures {M_y, I - M_y} and accepts on M_y.
    """
    name: str
    n: int
    message_dimension: int
    message: Callable[[str], np.ndarray] = field(compare=False)
    accept_element: Callable[[str], np.ndarray] = field(compare=False)
    completeness: float = 1.0
    soundness: float = 0.0
    predicate: Optional[Predicate] = field(default=None, compare=False)

    def povm(self, y: str) -> HermitianOperator:
        return HermitianOperator(RegisterLayout.of(("msg", self.message_dimension)), self.accept_element(check_bits(y, self.n)))

    def accept_probability(self, x: str, y: str) -> float:
        v = self.message(check_bits(x, self.n))
        return float(np.vdot(v, self.accept_element(check_bits(y, self.n)) @ v).real)


def eq_one_way(scheme: FingerprintScheme) -> OneWayProtocol:
    delta = scheme.overlap_bound
    if delta ** 2 > 1 / 3:
        raise ProtocolError(f"overlap bound {delta} too large: soundness {delta ** 2} > 1/3")

    def accept(y: str) -> np.ndarray:
        h = scheme.state(y)
        return np.outer(h, h.conj())

    return OneWayProtocol(f"eq_one_way[{scheme.kind.name.lower()}]", scheme.n, scheme.state_dimension,
                          scheme.state, accept, 1.0, delta ** 2, equality)


def exact_send_protocol(f: Predicate, n: int, name: str | None = None) -> OneWayProtocol:
    """Alice sends |x⟩; Bob accepts on the span of {|x⟩ : f(x, y) = 1}."""
    d = 2 ** n
    check_dimension(d, "exact-send message")

    def message(x: str) -> np.ndarray:
        v = np.zeros(d, dtype=complex)
        v[bits_index(x)] = 1.0
        return v

    def accept(y: str) -> np.ndarray:
        diag = [1.0 if f(format(i, f"0{n}b") if n else "", y) else 0.0 for i in range(d)]
        return np.diag(diag).astype(complex)

    return OneWayProtocol(name or f"exact_send[{getattr(f, '__name__', 'f')}]", n, d, message, accept, 1.0, 0.0, f)


def majority_repeat(p: OneWayProtocol, times: int) -> OneWayProtocol:
    """
    `times` independent copies of p; Bob accepts when a strict majority of copies accept.
    Completeness/soundness are binomial tails of p's values.
    """
    if times < 1 or times % 2 == 0:
        raise ProtocolError("majority_repeat needs an odd number of copies")
    dim = p.message_dimension ** times
    check_dimension(dim, "repeated message")
    threshold = times // 2

    def message(x: str) -> np.ndarray:
        out = np.ones(1, dtype=complex)
        for _ in range(times):
            out = np.kron(out, p.message(x))
        return out

    def accept(y: str) -> np.ndarray:
        m = p.accept_element(y)
        reject = np.eye(p.message_dimension) - m
        total = np.zeros((dim, dim), dtype=complex)
        for outcome in itertools.product((True, False), repeat=times):
            if sum(outcome) <= threshold:
                continue
            term = np.ones((1, 1), dtype=complex)
            for ok in outcome:
                term = np.kron(term, m if ok else reject)
            total += term
        return total

    completeness = float(binom.sf(threshold, times, p.completeness))
    soundness = float(binom.sf(threshold, times, p.soundness))
    return OneWayProtocol(f"majority[{times}]({p.name})", p.n, dim, message, accept, completeness, soundness,
                          p.predicate)


@dataclass(frozen=True)
class OneWayQmaProtocol:
    """
    One-way QMA protocol: Alice receives a proof of dimension `proof_dimension`, applies U_x to
    proof ⊗ |0⟩_ancilla and sends the whole register; Bob measures M'_y on it.
    """
    name: str
    n: int
    proof_dimension: int
    ancilla_dimension: int
    unitary: Callable[[str], np.ndarray] = field(compare=False)
    accept_element: Callable[[str], np.ndarray] = field(compare=False)
    completeness: float = 1.0
    soundness: float = 0.0
    predicate: Optional[Predicate] = field(default=None, compare=False)

    @property
    def message_dimension(self) -> int:
        return self.proof_dimension * self.ancilla_dimension

    def effective_operator(self, x: str, y: str) -> np.ndarray:
        """⟨0|U_x† M'_y U_x|0⟩ on Alice's proof register."""
        u = self.unitary(check_bits(x, self.n))
        pulled = u.conj().T @ self.accept_element(check_bits(y, self.n)) @ u
        e0 = np.zeros(self.ancilla_dimension, dtype=complex)
        e0[0] = 1.0
        return contract_vector(pulled, [self.proof_dimension, self.ancilla_dimension], 1, e0)

    def optimal_proof(self, x: str, y: str) -> tuple[float, np.ndarray]:
        layout = RegisterLayout.of(("proof", self.proof_dimension))
        b = self.effective_operator(x, y)
        value, vec = top_eigenpair(HermitianOperator(layout, (b + b.conj().T) / 2))
        return value, np.array(vec.amplitudes)


def two_party_value(q: OneWayQmaProtocol, x: str, y: str) -> float:
    """Best acceptance probability of the two-party protocol over Alice's proof."""
    return q.optimal_proof(x, y)[0]


def unitary_with_first_column(v: np.ndarray) -> np.ndarray:
    """A unitary U with U|0⟩ = v."""
    v = np.asarray(v, dtype=complex)
    d = v.shape[0]
    a = np.column_stack([v, np.eye(d, dtype=complex)[:, 1:]])
    q, r = np.linalg.qr(a, mode="complete")
    q[:, 0] *= r[0, 0]
    return q


def wrap_oneway_as_qma(p: OneWayProtocol) -> OneWayQmaProtocol:
    def unitary(x: str) -> np.ndarray:
        return unitary_with_first_column(p.message(x))

    return OneWayQmaProtocol(f"qma({p.name})", p.n, 1, p.message_dimension, unitary, p.accept_element,
                             p.completeness, p.soundness, p.predicate)
