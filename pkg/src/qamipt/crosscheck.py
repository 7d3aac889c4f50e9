"""Engine-against-oracle comparisons used by the ``crosscheck`` command."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import automaton_mc as mc
from . import oracle
from .circuit import Circuit, CircuitSpec, Layer, GateKind, generate_circuit
from .stabilizer import Tableau

AMPLITUDE_TOL = 1e-10
PURITY_TOL = 1e-10


@dataclass
class CrosscheckReport:
    stabilizer_cases: int = 0
    stabilizer_mismatches: int = 0
    max_entropy_dev: float = 0.0
    amplitude_cases: int = 0
    max_amplitude_dev: float = 0.0
    purity_cases: int = 0
    max_purity_dev: float = 0.0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.stabilizer_mismatches == 0
            and self.max_amplitude_dev <= AMPLITUDE_TOL
            and self.max_purity_dev <= PURITY_TOL
        )

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "stabilizer_cases": self.stabilizer_cases,
            "stabilizer_mismatches": self.stabilizer_mismatches,
            "max_entropy_dev": self.max_entropy_dev,
            "amplitude_cases": self.amplitude_cases,
            "max_amplitude_dev": self.max_amplitude_dev,
            "purity_cases": self.purity_cases,
            "max_purity_dev": self.max_purity_dev,
        }


def probe_regions(n: int, gen: np.random.Generator, extra: int = 4) -> list[list[int]]:
    """All periodic intervals from site 0 plus a few random subsets."""
    regions = [list(range(k)) for k in range(1, n)]
    regions += [list(range(s, s + n // 2)) for s in range(1, n // 2)]
    for _ in range(extra):
        size = int(gen.integers(1, n))
        regions.append(sorted(gen.choice(n, size, replace=False).tolist()))
    return regions


def replay_both(c: Circuit) -> tuple[Tableau, oracle.DenseState]:
    """Run the stabilizer engine and the oracle side by side.  Outcomes the
    tableau overrides (deterministic measurements) are fed to the oracle
    in their overridden form."""
    tab = Tableau.plus_state(c.L)
    s = oracle.DenseState.plus_state(c.L)
    for layer in c.layers:
        actual = tab.apply_layer(layer)
        if np.any(layer.kinds == GateKind.COMPOSITE_MEASURE):
            layer = Layer(layer.kinds, layer.a, layer.b, layer.angles,
                          np.where(layer.kinds == GateKind.COMPOSITE_MEASURE, actual, -1), layer.step)
        oracle.apply_layer(s, layer)
    return tab, s


def stabilizer_vs_oracle(spec: CircuitSpec, report: CrosscheckReport, gen: np.random.Generator) -> None:
    c = generate_circuit(spec)
    tab, s = replay_both(c)
    for region in probe_regions(c.L, gen):
        se = tab.entropy(region)
        so = oracle.renyi2_exact(s, region)
        dev = abs(se - so)
        report.max_entropy_dev = max(report.max_entropy_dev, dev)
        report.stabilizer_cases += 1
        if dev > 1e-9 or se != round(so):
            report.stabilizer_mismatches += 1
            report.failures.append(f"{spec}: region {region}: stabilizer {se} oracle {so}")


def all_strings(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def amplitudes_vs_oracle(c: Circuit) -> float:
    s = oracle.run_circuit(c)
    q, f = mc.backward_phases(c, all_strings(c.L))
    amp = np.exp(1j * (q * (math.pi / 2) + f)) / math.sqrt(2**c.L)
    return float(np.max(np.abs(amp - s.amplitudes)))


def run_all(L: int = 8, circuits: int = 20, master_seed: int = 0, T: int = 20, p: float = 0.15) -> CrosscheckReport:
    rep = CrosscheckReport()
    gen = np.random.default_rng(master_seed)
    for k in range(circuits):
        for model, n in (("QA_CLIFFORD_ENTANGLEMENT", L), ("NONQA_CLIFFORD", L), ("QA_PURIFICATION", L // 2)):
            stabilizer_vs_oracle(CircuitSpec(model, n, T, p, "periodic", master_seed, k), rep, gen)
        c = generate_circuit(CircuitSpec("QA_NONCLIFFORD", L, T, p, "periodic", master_seed, k))
        rep.max_amplitude_dev = max(rep.max_amplitude_dev, amplitudes_vs_oracle(c))
        rep.amplitude_cases += 1
    small = min(L, 6)
    for k in range(max(circuits // 4, 1)):
        c = generate_circuit(CircuitSpec("QA_NONCLIFFORD", small, T, p, "periodic", master_seed, k))
        s = oracle.run_circuit(c)
        for region in ([0], list(range(small // 2)), [0, 2, 3]):
            dev = abs(mc.exhaustive_purity(c, region) - oracle.purity(s, region))
            rep.max_purity_dev = max(rep.max_purity_dev, dev)
            rep.purity_cases += 1
    return rep
