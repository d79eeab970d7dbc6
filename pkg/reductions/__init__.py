from reductions.cut import TwoPartyQmaModel, cut_report, cut_to_two_party, qubits
