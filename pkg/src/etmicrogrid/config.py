"""TOML scenario files and the bundled case presets.

Schema (all frequencies in Hz on disk, rad/s internally)::

    name = "case1"
    [graph]       adjacency = [[...], ...]   # a[i][j] > 0: DG j sends to DG i
                  pinning = [...]
    [controller]  c_omega, c_p, sigma_omega, sigma_p, h, omega_ref_hz, trigger_mode
    [clocks]      t0 = [...]                 # seconds, each in [0, h)
    [plant]       kind = "reduced" | "network", initial = "droop-settle"
    [[plant.dgs]] m_p, n_q, v_nominal, r_c, l_c, bus
    [[network.lines]] from, to, r, l
    [[network.loads]] bus, r, l, connected, name
    [sim]         t_on, horizon, micro_step
    [[events]]    t, load, action            # action: connect | disconnect
"""
from __future__ import annotations

import math
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .controller import ControllerParams, TriggerMode
from .engine import LoadEvent, Scenario
from .errors import ConfigInvalid
from .graph import CommGraph
from .plant import DGParams, Line, Load, NetworkModel

PRESETS = ("case1", "case2", "case3")


def _get(tree: dict, dotted: str, default: Any = ...) -> Any:
    node = tree
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is ...:
                raise ConfigInvalid(f"missing required field '{dotted}'")
            return default
        node = node[part]
    return node


def _num(tree: dict, dotted: str, default: Any = ...) -> float:
    v = _get(tree, dotted, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigInvalid(f"field '{dotted}': expected a number, got {v!r}")
    return float(v)


def _field(where: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigInvalid:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigInvalid(f"{where}: {exc}") from exc


def parse_text(text: str, source: str = "<config>") -> Scenario:
    try:
        tree = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"{source}: {exc}") from exc
    return scenario_from_tree(tree)


def scenario_from_tree(tree: dict) -> Scenario:
    graph = _field("graph", CommGraph, _get(tree, "graph.adjacency"), _get(tree, "graph.pinning"))
    n = graph.n
    ctrl = _field(
        "controller", ControllerParams,
        c_omega=_num(tree, "controller.c_omega"),
        c_P=_num(tree, "controller.c_p"),
        sigma_omega=_num(tree, "controller.sigma_omega"),
        sigma_P=_num(tree, "controller.sigma_p"),
        omega_ref=2 * math.pi * _num(tree, "controller.omega_ref_hz", 50.0),
        h=_num(tree, "controller.h"),
        trigger_mode=_get(tree, "controller.trigger_mode", TriggerMode.INDEPENDENT.value),
    )
    dg_rows = _get(tree, "plant.dgs")
    if not isinstance(dg_rows, list):
        raise ConfigInvalid("field 'plant.dgs': expected an array of tables")
    dgs, buses = [], []
    for k, row in enumerate(dg_rows):
        where = f"plant.dgs[{k}]"
        dgs.append(_field(where, DGParams, m_p=_num(row, "m_p"), n_q=_num(row, "n_q", 0.0),
                          v_nominal=_num(row, "v_nominal", 380.0), r_c=_num(row, "r_c", 0.0),
                          l_c=_num(row, "l_c", 0.0)))
        buses.append(int(_num(row, "bus", k)))
    if len(dgs) != n:
        raise ConfigInvalid(f"field 'plant.dgs': {len(dgs)} entries for {n} agents")

    network = None
    if "network" in tree:
        lines = [_field(f"network.lines[{k}]", Line, int(_num(r, "from")), int(_num(r, "to")),
                        _num(r, "r"), _num(r, "l"))
                 for k, r in enumerate(_get(tree, "network.lines", []))]
        loads = [_field(f"network.loads[{k}]", Load, int(_num(r, "bus")), _num(r, "r"),
                        _num(r, "l"), bool(r.get("connected", True)), str(r.get("name", "")))
                 for k, r in enumerate(_get(tree, "network.loads", []))]
        network = _field("network", NetworkModel.from_dgs, dgs, buses, lines, loads,
                         **({"n_buses": int(tree["network"]["n_buses"])}
                            if "n_buses" in tree["network"] else {}))

    events = []
    for k, r in enumerate(_get(tree, "events", [])):
        action = _get(r, "action")
        if action not in ("connect", "disconnect"):
            raise ConfigInvalid(f"field 'events[{k}].action': expected connect|disconnect, got {action!r}")
        events.append(LoadEvent(_num(r, "t"), int(_num(r, "load")), action))

    clocks = _get(tree, "clocks.t0", [0.0] * n)
    if not isinstance(clocks, list):
        raise ConfigInvalid("field 'clocks.t0': expected a list")
    sc = Scenario(
        graph=graph, controller=ctrl, dg_params=dgs,
        plant_kind=_get(tree, "plant.kind", "reduced"), network=network,
        clocks=[float(c) for c in clocks],
        t_on=_num(tree, "sim.t_on"), horizon=_num(tree, "sim.horizon"),
        micro_step=_num(tree, "sim.micro_step", 1e-3),
        load_events=events, initial_state=_get(tree, "plant.initial", "droop-settle"),
        name=str(tree.get("name", "")),
    )
    sc.validate()
    return sc


def load_config(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_text(path.read_text(), source=str(path))


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigInvalid(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("etmicrogrid.presets").joinpath(f"{name}.toml").read_text()


def load_preset(name: str) -> Scenario:
    return parse_text(preset_text(name), source=f"preset:{name}")


def with_overrides(sc: Scenario, **values: float) -> Scenario:
    """Copy of ``sc`` with controller fields replaced (config key names)."""
    keymap = {"c_omega": "c_omega", "c_p": "c_P", "sigma_omega": "sigma_omega",
              "sigma_p": "sigma_P", "h": "h"}
    unknown = set(values) - set(keymap)
    if unknown:
        raise ConfigInvalid(f"cannot override {sorted(unknown)}; allowed: {sorted(keymap)}")
    ctrl = _field("override", replace, sc.controller,
                  **{keymap[k]: float(v) for k, v in values.items()})
    return replace(sc, controller=ctrl)
