"""Experiment configuration: flat ``key = value`` text, repeatable keys.

Lists may be given by repeating a key, by commas, or as a range
``lo..hi:step`` (inclusive, for numeric keys)::

    model = QA_CLIFFORD_ENTANGLEMENT
    engine = stabilizer
    L = 128
    L = 256
    p = 0.10..0.18:0.01
    T = 4000
    ensemble = 20
    observables = entropy_LA, mutual_info
    region_A = 0:32
    master_seed = 7
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from .circuit import Boundary, Model

OBSERVABLES = ("entropy_t", "entropy_LA", "purification", "mutual_info", "hamming", "front", "bond_dp", "p_same")
ENGINES = ("stabilizer", "mc", "classical", "oracle")
CLASSICAL = ("hamming", "front", "bond_dp", "p_same")
MODEL_ALIASES = {"bit-string": Model.QA_PURIFICATION.value, "bit_string": Model.QA_PURIFICATION.value}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model: str
    L: list[int]
    p: list[float]
    T: int
    ensemble: int = 1
    observables: list[str] | None = None  # default depends on engine
    engine: str = "stabilizer"
    boundary: str = Boundary.PERIODIC.value
    region_A: list[int] | None = None
    region_B: list[int] | None = None
    mi_size: int | None = None  # |A| = |B| for antipodal mutual information
    master_seed: int = 0
    workers: int = 1
    out: str = "out"
    mc_samples: int = 10_000
    mc_max_samples: int = 10_000_000
    mc_times: int = 8  # number of sample times for MC time series
    init: str = "random-pair"
    window: list[float] | None = None
    n_boot: int = 200

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        m = MODEL_ALIASES.get(self.model, self.model)
        if m != "bond_dp":
            try:
                m = Model(m).value
            except ValueError:
                raise ConfigError(f"unknown model {self.model!r}") from None
        self.model = m
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}")
        if not self.observables:
            if m == "bond_dp":
                self.observables = ["bond_dp"]
            elif self.engine == "classical":
                self.observables = ["hamming"]
            else:
                self.observables = ["entropy_t"]
        try:
            self.boundary = Boundary(self.boundary).value
        except ValueError:
            raise ConfigError(f"unknown boundary {self.boundary!r}") from None
        if not self.L or any(L < 2 for L in self.L):
            raise ConfigError("L must be given and >= 2")
        if not self.p or any(not 0.0 <= p <= 1.0 for p in self.p):
            raise ConfigError("p must be given and lie in [0, 1]")
        if self.T < 0 or self.ensemble < 1 or self.workers < 1:
            raise ConfigError("need T >= 0, ensemble >= 1, workers >= 1")
        for o in self.observables:
            if o not in OBSERVABLES:
                raise ConfigError(f"unknown observable {o!r}")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be nonnegative")
        self._check_engine()
        for name in ("region_A", "region_B"):
            reg = getattr(self, name)
            if reg is not None and any(not 0 <= s < min(self.L) for s in reg):
                raise ConfigError(f"{name} does not fit in L = {min(self.L)}")
        if self.mi_size is not None and 2 * self.mi_size > min(self.L):
            raise ConfigError("mi_size too large for L")

    def _check_engine(self) -> None:
        e, m = self.engine, self.model
        if e == "oracle":
            return
        if m == "bond_dp":
            if e != "classical" or set(self.observables) - {"bond_dp"}:
                raise ConfigError("bond_dp runs only the classical bond_dp observable")
            return
        model = Model(m)
        quantum = [o for o in self.observables if o not in CLASSICAL]
        classical = [o for o in self.observables if o in CLASSICAL]
        if e == "classical":
            if quantum:
                raise ConfigError(f"classical engine cannot compute {quantum}")
            if not model.automaton:
                raise ConfigError(f"{m} has no bit-string dynamics")
            if "bond_dp" in classical:
                raise ConfigError("bond_dp observable needs model = bond_dp")
        else:
            if classical:
                raise ConfigError(f"{classical} need engine = classical")
            if e == "stabilizer" and not model.clifford:
                raise ConfigError(f"{m} is not Clifford: use engine = mc")
            if e == "mc" and not model.automaton:
                raise ConfigError(f"{m} contains H layers: use engine = stabilizer")
        if "purification" in self.observables and not model.purification:
            raise ConfigError("purification observable needs a purification model")

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, list):
                lines.extend(f"{f.name} = {_fmt(e)}" for e in v)
            else:
                lines.append(f"{f.name} = {_fmt(v)}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


_LIST_KEYS = {"L": int, "p": float, "observables": str, "region_A": int, "region_B": int, "window": float}
_SCALAR_KEYS = {
    "model": str, "T": int, "ensemble": int, "engine": str, "boundary": str, "master_seed": int,
    "workers": int, "out": str, "mc_samples": int, "mc_max_samples": int, "mc_times": int,
    "init": str, "n_boot": int, "mi_size": int,
}


def _expand(key: str, raw: str, typ) -> list:
    out = []
    for part in (s.strip() for s in raw.split(",")):
        if not part:
            continue
        if typ is not str and ".." in part:
            lo, _, rest = part.partition("..")
            hi, _, step = rest.partition(":")
            if typ is int:
                stop = int(hi)
                out.extend(range(int(lo), stop + 1, int(step) if step else 1))
            else:
                # decimal arithmetic keeps grid points exact in the output
                d_lo, d_hi = Decimal(lo), Decimal(hi)
                d_step = Decimal(step) if step else None
                if d_step is None or d_step <= 0:
                    raise ConfigError(f"{key}: float range needs a positive step")
                x = d_lo
                while x <= d_hi:
                    out.append(float(x))
                    x += d_step
        elif typ is int and ":" in part:
            # half-open site range a:b
            a, _, b = part.partition(":")
            out.extend(range(int(a), int(b)))
        else:
            out.append(typ(part))
    return out


def parse_config(text: str) -> ExperimentConfig:
    values: dict[str, list] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep:
            raise ConfigError(f"line {n}: expected key = value")
        typ = _LIST_KEYS.get(key) or _SCALAR_KEYS.get(key)
        if typ is None:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        try:
            values.setdefault(key, []).extend(_expand(key, raw, typ) if key in _LIST_KEYS else [typ(raw)])
        except ValueError as exc:
            raise ConfigError(f"line {n}: {exc}") from None
    kwargs = {}
    for key, vals in values.items():
        if key in _LIST_KEYS:
            kwargs[key] = vals
        else:
            if len(vals) != 1:
                raise ConfigError(f"{key} given {len(vals)} times")
            kwargs[key] = vals[0]
    for req in ("model", "L", "p", "T"):
        if req not in kwargs:
            raise ConfigError(f"missing required key {req!r}")
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        return parse_config(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
