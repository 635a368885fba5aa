"""JSON run configuration: parsing, validation and object construction."""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .errors import ConfigError, KernelEntropyError
from .kernels import (Domain, GaussianKernel, Measure, TabulatedKernel, build_grid,
                      DEFAULT_GRID_CAP)
from .spectrum import (Spectrum, gaussian_bound_spectrum, nystrom_spectrum,
                       power_law_spectrum, read_spectrum_csv, tensor_spectrum)

DEFAULTS = {
    "measure": "uniform_normalized",
    "nodes_per_dim": 64,
    "grid_cap": DEFAULT_GRID_CAP,
    "seed": 0,
    "c_universal": 1.0,
    "delta_points": 512,
    "norm": "sup_norm",
}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "--config") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "--config") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("top level must be an object")
    return validate_config(dict(DEFAULTS, **cfg))


def _positive(cfg, key, path=None, integer=False):
    v = cfg.get(key)
    kind = int if integer else (int, float)
    if isinstance(v, bool) or not isinstance(v, kind) or not v > 0:
        raise ConfigError(f"must be a positive {'integer' if integer else 'number'}",
                          path or key)
    return v


def validate_config(cfg: dict) -> dict:
    """Check field types and ranges up front so no compute starts on bad input."""
    eps = cfg.get("epsilon_grid")
    if eps is not None:
        if not isinstance(eps, list) or not eps:
            raise ConfigError("must be a nonempty list", "epsilon_grid")
        arr = np.asarray(eps, dtype=float)
        if np.any(~(arr > 0)):
            raise ConfigError("values must be strictly positive", "epsilon_grid")
        if np.any(np.diff(arr) <= 0):
            raise ConfigError("values must be strictly increasing", "epsilon_grid")
    theta = cfg.get("theta_grid")
    if theta is not None:
        if not isinstance(theta, list) or not theta:
            raise ConfigError("must be a nonempty list", "theta_grid")
        if any(not 0 < float(t) < 0.5 for t in theta):
            raise ConfigError("values must lie in (0, 0.5)", "theta_grid")
    _positive(cfg, "c_universal")
    _positive(cfg, "delta_points", integer=True)
    _positive(cfg, "nodes_per_dim", integer=True)
    if cfg["norm"] not in ("sup_norm", "L2"):
        raise ConfigError("must be 'sup_norm' or 'L2'", "norm")
    seed = cfg.get("seed")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("must be a non-negative integer", "seed")
    spec = cfg.get("spectrum")
    if spec is not None:
        if not isinstance(spec, dict) or "source" not in spec:
            raise ConfigError("needs a 'source' field", "spectrum")
        if spec["source"] == "explicit":
            vals = spec.get("values")
            if not isinstance(vals, list) or not vals:
                raise ConfigError("must be a nonempty list", "spectrum.values")
            arr = np.asarray(vals, dtype=float)
            if np.any(np.diff(arr) > 0):
                raise ConfigError("eigenvalues must be in descending order", "spectrum.values")
            if np.any(~(arr >= 0)):
                raise ConfigError("eigenvalues must be non-negative", "spectrum.values")
    return cfg


def check_out_dir(out) -> Path:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc}", "--out") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError("output directory is not writable", "--out")
    return out


def build_domain(cfg) -> Domain:
    box = cfg.get("domain", {}).get("box", [[-1.0, 1.0]])
    try:
        return Domain(tuple(tuple(iv) for iv in box))
    except (KernelEntropyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "domain.box") from exc


def build_measure(cfg) -> Measure:
    m = cfg.get("measure", "uniform_normalized")
    try:
        if isinstance(m, dict) and "empirical" in m:
            return Measure.empirical(m["empirical"])
        return Measure(m)
    except KernelEntropyError as exc:
        raise ConfigError(str(exc), "measure") from exc


def build_setup(cfg):
    """Return (kernel, domain, measure, grid) from the kernel_core block."""
    kcfg = cfg.get("kernel")
    if not isinstance(kcfg, dict) or "type" not in kcfg:
        raise ConfigError("needs a 'type' field", "kernel")
    domain = build_domain(cfg)
    measure = build_measure(cfg)
    grid = build_grid(domain, measure, cfg["nodes_per_dim"], cfg["grid_cap"])
    kind = kcfg["type"]
    try:
        if kind == "gaussian":
            kernel = GaussianKernel(float(kcfg["sigma"]))
        elif kind == "constant":
            kernel = TabulatedKernel.constant(float(kcfg["value"]), grid.nodes)
        elif kind == "tabulated":
            kernel = TabulatedKernel(kcfg["nodes"], kcfg["values"])
            m = len(kernel.nodes)
            grid = type(grid)(kernel.nodes, np.full(m, grid.total_mass / m),
                              grid.total_mass, grid.measure_kind)
        else:
            raise ConfigError(f"unknown kernel type {kind!r}", "kernel.type")
    except KeyError as exc:
        raise ConfigError(f"missing field {exc}", "kernel") from exc
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "kernel") from exc
    return kernel, domain, measure, grid


def build_spectrum(cfg, setup=None, base_dir="."):
    """Return (spectrum, eigensystem or None, parameters dict)."""
    scfg = cfg.get("spectrum") or {"source": "nystrom"}
    src = scfg["source"]
    params = {"source": src}
    try:
        if src == "nystrom":
            setup = setup or build_setup(cfg)
            kernel, _, measure, grid = setup
            k_max = int(scfg.get("k_max", len(grid)))
            system = nystrom_spectrum(kernel, grid, min(k_max, len(grid)))
            params.update(nodes=len(grid), k_max=k_max, measure=measure.kind,
                          kernel=cfg["kernel"])
            return system.spectrum, system, params
        if src == "gaussian_bound":
            sp = gaussian_bound_spectrum(float(scfg["sigma"]), int(scfg["k_max"]))
            params.update(sigma=scfg["sigma"], k_max=scfg["k_max"])
        elif src == "power_law":
            sp = power_law_spectrum(float(scfg["c"]), float(scfg["gamma"]), int(scfg["count"]))
            params.update(c=scfg["c"], gamma=scfg["gamma"], count=scfg["count"])
        elif src == "tensor":
            base = gaussian_bound_spectrum(float(scfg["sigma"]), int(scfg["k_max"]))
            n = int(scfg.get("n", 2))
            sp = tensor_spectrum([base] * n, float(scfg["cutoff"]), int(scfg.get("cap", 1_000_000)))
            params.update(sigma=scfg["sigma"], k_max=scfg["k_max"], n=n, cutoff=scfg["cutoff"])
        elif src == "explicit":
            sp = Spectrum(scfg["values"], "explicit")
        elif src == "file":
            sp = read_spectrum_csv(Path(base_dir) / scfg["path"])
            params.update(path=scfg["path"])
        else:
            raise ConfigError(f"unknown source {src!r}", "spectrum.source")
    except KeyError as exc:
        raise ConfigError(f"missing field {exc}", "spectrum") from exc
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "spectrum") from exc
    return sp, None, params


def total_mass(cfg) -> float:
    if "total_mass" in cfg:
        return float(_positive(cfg, "total_mass"))
    return build_measure(cfg).total_mass(build_domain(cfg))
