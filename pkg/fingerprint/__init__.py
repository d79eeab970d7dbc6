from fingerprint.scheme import FingerprintScheme, SchemeKind, fingerprint_state
from fingerprint.oneway import (
    OneWayProtocol,
    OneWayQmaProtocol,
    eq_one_way,
    equality,
    exact_send_protocol,
    hamming_at_most,
    majority_repeat,
    two_party_value,
    wrap_oneway_as_qma,
)
