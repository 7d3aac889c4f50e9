"""Line-oriented text format for circuits.

Grammar::

    file    := header gate*
    header  := "# qamipt-circuit 1" NL
               "L" INT NL "n_system" INT NL "steps" INT NL
               "model" (NAME | "none") NL "boundary" ("periodic" | "open") NL
    gate    := LAYER STEP KIND SITE [SITE] [ANGLE ANGLE ANGLE] [OUTCOME] NL

``LAYER`` is the 0-based layer (time slice) index and ``STEP`` the time step
that layer belongs to.  ``KIND`` is a :class:`~qamipt.circuit.GateKind`
name; RZ lines carry three angles written with ``repr`` so they round-trip
exactly; COMPOSITE_MEASURE lines end with the outcome bit.  Fields are
separated by single spaces; blank lines and further ``#`` lines are ignored.
Empty layers are not representable and are dropped on write.
"""

from __future__ import annotations

from pathlib import Path

from .circuit import Boundary, Circuit, Gate, GateKind, Layer, Model

MAGIC = "# qamipt-circuit 1"


def dumps(circuit: Circuit) -> str:
    lines = [
        MAGIC,
        f"L {circuit.L}",
        f"n_system {circuit.n_system}",
        f"steps {circuit.steps}",
        f"model {circuit.model.value if circuit.model else 'none'}",
        f"boundary {Boundary(circuit.boundary).value}",
    ]
    t = 0
    for layer in circuit.layers:
        if not len(layer):
            continue
        for g in layer.gates:
            fields = [str(t), str(layer.step), g.kind.name, *map(str, g.sites)]
            if g.angles is not None:
                fields += [repr(a) for a in g.angles]
            if g.outcome is not None:
                fields.append(str(g.outcome))
            lines.append(" ".join(fields))
        t += 1
    return "\n".join(lines) + "\n"


def loads(text: str) -> Circuit:
    rows = text.splitlines()
    if not rows or rows[0].strip() != MAGIC:
        raise ValueError("not a qamipt circuit file")
    header: dict[str, str] = {}
    body = []
    for raw in rows[1:]:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(" ")
        if parts[0].isdigit():
            body.append(parts)
        else:
            header[parts[0]] = parts[1]
    layers: list[Layer] = []
    current: list[Gate] = []
    current_t, current_step = None, 0
    for parts in body:
        t, step, kind = int(parts[0]), int(parts[1]), GateKind[parts[2]]
        if t != current_t:
            if current:
                layers.append(Layer.from_gates(current, current_step))
            current, current_t, current_step = [], t, step
        rest = parts[3:]
        if kind is GateKind.COMPOSITE_MEASURE:
            current.append(Gate(kind, (int(rest[0]),), outcome=int(rest[1])))
        elif kind is GateKind.H:
            current.append(Gate(kind, (int(rest[0]),)))
        elif kind is GateKind.RZ:
            current.append(Gate(kind, (int(rest[0]), int(rest[1])), tuple(float(x) for x in rest[2:5])))
        else:
            current.append(Gate(kind, (int(rest[0]), int(rest[1]))))
    if current:
        layers.append(Layer.from_gates(current, current_step))
    model = header.get("model", "none")
    return Circuit(
        L=int(header["L"]),
        layers=layers,
        model=None if model == "none" else Model(model),
        boundary=Boundary(header.get("boundary", "periodic")),
        steps=int(header.get("steps", 0)),
        n_system=int(header["n_system"]) if "n_system" in header else None,
    )


def save(circuit: Circuit, path: str | Path) -> None:
    Path(path).write_text(dumps(circuit))


def load(path: str | Path) -> Circuit:
    return loads(Path(path).read_text())
