"""JSON/CSV input and output shared by the command line and the tests."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from .configspace import site_set
from .detection.plan import DetectionPlan, random_plan
from .lattice.circuit import GateCircuit, LatticeCut, greatest_valid_below
from .lattice.state import Basis, StateVector

SCHEMA = "cauchyborn.config/1"


class ConfigError(ValueError):
    pass


def builtin_path(name: str):
    return resources.files("cauchyborn").joinpath("data", f"{name}.json")


def load_builtin(name: str) -> dict:
    path = builtin_path(name)
    if not path.is_file():
        raise ConfigError(f"no built-in data named {name!r}")
    return json.loads(path.read_text())


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def check_schema(config: dict) -> dict:
    version = config.get("schema")
    if version != SCHEMA:
        raise ConfigError(f"unsupported config schema {version!r}; expected {SCHEMA!r}")
    return config


def load_circuit(spec, base_dir: Path | None = None) -> GateCircuit:
    """Circuit from ``"builtin:<name>"``, a file path, or an inline dict."""
    if isinstance(spec, str):
        if spec.startswith("builtin:"):
            data = load_builtin(spec.split(":", 1)[1])
        else:
            path = Path(spec)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            data = load_json(path)
        spec = data.get("circuit", data)
    return GateCircuit.from_json(spec)


def parse_cut(spec, circuit: GateCircuit) -> LatticeCut:
    """Cut from a height list, ``{"flat": h}`` or ``{"below": profile}``."""
    if isinstance(spec, dict):
        if "flat" in spec:
            cut = circuit.flat_cut(int(spec["flat"]))
        elif "below" in spec:
            cut = greatest_valid_below(spec["below"], circuit.depth)
        else:
            raise ConfigError(f"unknown cut spec {spec}")
    else:
        cut = LatticeCut(tuple(spec))
    return circuit.validate(cut)


def parse_basis(spec, num_sites: int) -> Basis:
    if spec in (None, "full"):
        return Basis.full(num_sites)
    if isinstance(spec, dict) and "sector" in spec:
        return Basis.sector(num_sites, tuple(np.atleast_1d(spec["sector"]).tolist()))
    raise ConfigError(f"unknown basis spec {spec}")


def parse_state(spec: dict, circuit: GateCircuit, cut: LatticeCut) -> StateVector:
    n = circuit.num_sites
    if "amplitudes" in spec:
        basis = parse_basis(spec.get("basis"), n)
        entries = [(int(m), complex(re, im)) for m, re, im in spec["amplitudes"]]
        psi = StateVector.from_amplitudes(cut, basis, entries)
        if abs(psi.norm() - 1) > 1e-9:
            raise ConfigError(f"state is not normalised (norm {psi.norm():.12g})")
        return psi
    if "particles" in spec:
        basis = Basis.sector(n, int(spec["particles"]))
        return StateVector.random(cut, basis, np.random.default_rng(spec.get("seed", 0)))
    raise ConfigError("state needs 'amplitudes' or 'particles'")


def parse_plan(spec: dict, base_dir: Path | None = None) -> DetectionPlan:
    if "seed" in spec and "circuit" not in spec:
        return random_plan(int(spec["seed"]))
    circuit = load_circuit(spec["circuit"], base_dir)
    cut0 = parse_cut(spec.get("initial_cut", {"flat": 0}), circuit)
    psi0 = parse_state(spec["state"], circuit, cut0)
    target = parse_cut(spec["target_cut"], circuit)
    partition = tuple(site_set(p) for p in spec["partition"])
    order = tuple(spec["order"]) if spec.get("order") is not None else None
    return DetectionPlan(circuit, psi0, target, partition, order, label=spec.get("label", "plan"))


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path, data) -> None:
    _atomic_write(Path(path), json.dumps(_plain(data), indent=2, sort_keys=True) + "\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def write_csv(path, rows: list[dict], columns: list[str] | None = None) -> None:
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c, "")) for c in columns])
    _atomic_write(Path(path), buf.getvalue())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
