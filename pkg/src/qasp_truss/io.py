"""Model files, run configuration and result writers."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .optimizer import OptConfig, default_design_qasp, default_equilibrium_qasp
from .qasp import QaspConfig
from .samplers import SamplerConfig
from .truss import Bar, TrussError, TrussModel

BENCHMARK_CASES = ("case1", "case2", "case3", "case3d")
MODEL_KEYS = {"dimension", "nodes", "bars", "supports", "loads", "name", "meta"}


class InputError(ValueError):
    """Bad model or configuration input; maps to CLI exit code 2."""


def _field_error(where: str, exc) -> InputError:
    return InputError(f"{where}: {exc}")


def model_from_dict(doc: dict, source: str = "<model>") -> TrussModel:
    if not isinstance(doc, dict):
        raise InputError(f"{source}: top level must be an object")
    unknown = set(doc) - MODEL_KEYS
    if unknown:
        raise InputError(f"{source}: unknown keys {sorted(unknown)}")
    for key in ("dimension", "nodes", "bars"):
        if key not in doc:
            raise InputError(f"{source}: missing '{key}'")
    try:
        d = int(doc["dimension"])
    except (TypeError, ValueError) as exc:
        raise _field_error(f"{source}: dimension", exc)
    nodes = []
    for n, xyz in enumerate(doc["nodes"]):
        if not isinstance(xyz, (list, tuple)) or len(xyz) != d:
            raise InputError(f"{source}: nodes[{n}] must have {d} coordinates")
        nodes.append([float(c) for c in xyz])
    bars = []
    for k, b in enumerate(doc["bars"]):
        try:
            bars.append(Bar(int(b["i"]), int(b["j"]), float(b["area0"]), float(b["E"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise _field_error(f"{source}: bars[{k}]", f"needs i, j, area0, E ({exc})")
    supports = []
    for s, item in enumerate(doc.get("supports", [])):
        try:
            node, axis = item
            supports.append((int(node), int(axis)))
        except (TypeError, ValueError) as exc:
            raise _field_error(f"{source}: supports[{s}]", f"expected [node, axis] ({exc})")
    loads = np.zeros(d * len(nodes))
    for s, item in enumerate(doc.get("loads", [])):
        try:
            node, axis, value = item
            node, axis = int(node), int(axis)
            if not (0 <= node < len(nodes) and 0 <= axis < d):
                raise ValueError("node or axis out of range")
            loads[d * node + axis] += float(value)
        except (TypeError, ValueError) as exc:
            raise _field_error(f"{source}: loads[{s}]", f"expected [node, axis, value] ({exc})")
    try:
        return TrussModel(d, np.array(nodes).reshape(len(nodes), d), tuple(bars), frozenset(supports), loads,
                          name=str(doc.get("name", "")))
    except TrussError as exc:
        raise InputError(f"{source}: {exc}") from exc


def model_to_dict(model: TrussModel) -> dict:
    d = model.dimension
    loads = [[n // d, n % d, float(v)] for n, v in enumerate(model.loads) if v != 0.0]
    return {
        "name": model.name,
        "dimension": d,
        "nodes": model.nodes.tolist(),
        "bars": [{"i": b.i, "j": b.j, "area0": b.area0, "E": b.E} for b in model.bars],
        "supports": sorted([list(s) for s in model.supports]),
        "loads": loads,
    }


def _read_document(path: Path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            return yaml.safe_load(text) or {}
        return json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise InputError(f"{path}: parse error: {exc}") from exc


def load_model(path) -> tuple[TrussModel, dict]:
    """Model and its free-form ``meta`` block."""
    doc = _read_document(Path(path))
    return model_from_dict(doc, str(path)), dict(doc.get("meta", {})) if isinstance(doc, dict) else {}


def benchmark_path(case: str) -> Path:
    if case not in BENCHMARK_CASES:
        raise InputError(f"unknown case {case!r}; choose from {', '.join(BENCHMARK_CASES)}")
    return Path(str(resources.files("qasp_truss") / "data" / f"{case}.json"))


def load_benchmark(case: str) -> tuple[TrussModel, dict]:
    return load_model(benchmark_path(case))


# -- run configuration -----------------------------------------------------

QASP_KEYS = {f.name for f in fields(QaspConfig)}
SAMPLER_KEYS = {"backend", "endpoint", "num_reads", "sa_sweeps", "timeout", "retries"}
OPT_KEYS = {"v_target", "volume_penalty", "design_box", "alpha_min", "alpha_max", "max_outer", "residual_tol",
            "max_equilibrium_restarts", "alpha0"}
TOP_KEYS = {"sampler", "design_sampler", "seed", "seeds", "out", "optimizer", "equilibrium", "design"}


@dataclass
class SamplerChoice:
    backend: str = "exhaustive"
    endpoint: str | None = None
    config: SamplerConfig = field(default_factory=SamplerConfig)


@dataclass
class RunConfig:
    sampler: SamplerChoice = field(default_factory=SamplerChoice)
    design_sampler: SamplerChoice | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    out: str | None = None
    opt: OptConfig = field(default_factory=OptConfig)
    alpha0: float | list | None = None


def _check_keys(section: str, doc, allowed):
    if not isinstance(doc, dict):
        raise InputError(f"config: '{section}' must be a mapping")
    unknown = set(doc) - allowed
    if unknown:
        raise InputError(f"config: unknown keys in '{section}': {sorted(unknown)}")


def _sampler_choice(section: str, doc: dict, default_backend="exhaustive") -> SamplerChoice:
    _check_keys(section, doc, SAMPLER_KEYS)
    backend = doc.get("backend", default_backend)
    if backend not in ("exhaustive", "sa", "remote"):
        raise InputError(f"config: {section}.backend must be exhaustive, sa or remote")
    try:
        cfg = SamplerConfig(
            num_reads=int(doc.get("num_reads", 200)),
            sa_sweeps=int(doc.get("sa_sweeps", 1000)),
            timeout=float(doc.get("timeout", 30.0)),
            retries=int(doc.get("retries", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise _field_error(f"config: {section}", exc)
    return SamplerChoice(backend, doc.get("endpoint"), cfg)


def _qasp(section: str, doc: dict, base: QaspConfig) -> QaspConfig:
    _check_keys(section, doc, QASP_KEYS)
    try:
        if "bits_per_var" in doc and "epsilon0" not in doc:
            L = int(doc["bits_per_var"])
            base = default_equilibrium_qasp(L) if section == "equilibrium" else default_design_qasp(L)
        vals = {k: (np.asarray(v, dtype=float) if isinstance(v, list) else v) for k, v in doc.items()}
        return base.replace(**vals)
    except (TypeError, ValueError) as exc:
        raise _field_error(f"config: {section}", exc)


def run_config_from_dict(doc: dict | None) -> RunConfig:
    doc = doc or {}
    _check_keys("<top>", doc, TOP_KEYS)
    rc = RunConfig()
    if "sampler" in doc:
        rc.sampler = _sampler_choice("sampler", doc["sampler"])
    if "design_sampler" in doc:
        rc.design_sampler = _sampler_choice("design_sampler", doc["design_sampler"], rc.sampler.backend)
    if "seeds" in doc:
        rc.seeds = [int(s) for s in doc["seeds"]]
    elif "seed" in doc:
        rc.seeds = [int(doc["seed"])]
    rc.out = doc.get("out")
    opt = doc.get("optimizer", {})
    _check_keys("optimizer", opt, OPT_KEYS)
    rc.alpha0 = opt.get("alpha0")
    kw = {k: v for k, v in opt.items() if k != "alpha0"}
    if "design_box" in kw:
        kw["design_box"] = tuple(float(v) for v in kw["design_box"])
    try:
        base = OptConfig(**kw)
        eq = _qasp("equilibrium", doc.get("equilibrium", {}), base.equilibrium_qasp)
        de = _qasp("design", doc.get("design", {}), base.design_qasp)
        rc.opt = OptConfig(**kw, equilibrium_qasp=eq, design_qasp=de)
    except (TypeError, ValueError) as exc:
        raise InputError(f"config: {exc}") from exc
    return rc


def load_run_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    return run_config_from_dict(_read_document(Path(path)))


# -- writers ---------------------------------------------------------------

def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_json(path: Path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def design_to_dict(model: TrussModel, alpha) -> dict:
    """Per-bar table: endpoints, area ratio and physical area ``alpha * A0``."""
    bars = []
    for k, b in enumerate(model.bars):
        bars.append({
            "index": k + 1,
            "bar": f"{_fmt_point(model.nodes[b.i])}-{_fmt_point(model.nodes[b.j])}",
            "alpha": float(alpha[k]),
            "area": float(alpha[k] * b.area0),
        })
    return {"model": model.name, "alpha": [float(a) for a in alpha], "bars": bars}


def _fmt_point(p) -> str:
    return "(" + ",".join(f"{c:g}" for c in p) + ")"
