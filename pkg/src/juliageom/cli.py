"""Command-line front end: presets, config files, JSON reports, PPM export.

Usage::

    juliageom analyze --preset chebyshev --out out/
    juliageom john --config run.ini --seed 7 --no-timings

Exit status is 0 on success, 2 for invalid input and 3 when a numerical
procedure fails; failures print a JSON error object and write no files.
"""

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
import time
from importlib import resources

import numpy as np

from . import __version__
from .errors import JuliaGeomError, NumericalError, ValidationError
from .grid import GridSpec, classify_and_label, distance_field, export_field, julia_sample
from .orbits import detect_cycles, semi_hyperbolicity_verdict
from .pullback import shrink_experiment
from .ratmap import Polynomial, RationalMap, format_complex, format_map, parse_complex, parse_map, poly_roots
from .regularity import crosscut_continuum, holder_check, john_estimate, random_julia_pairs
from .summability import summability_report

COMMANDS = ("analyze", "render", "shrink", "john", "holder", "lc", "summability", "catalog")
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def rabbit_parameter():
    """Root of c^3 + 2c^2 + c + 1 with positive imaginary part."""
    roots = poly_roots(Polynomial([1, 1, 2, 1]))
    return complex(max((z for z, _ in roots), key=lambda c: c.imag))


# name -> (description, c of z^2 + c, default grid)
PRESETS = {
    "squaring": ("z^2", 0, ("standard", 0j, 1.25)),
    "chebyshev": ("z^2 - 2", -2, ("inverted", 0j, 1.0)),
    "basilica": ("z^2 - 1", -1, ("standard", 0j, 1.7)),
    "dendrite": ("z^2 + i", 1j, ("inverted", 0j, 1.5)),
    "cauliflower": ("z^2 + 1/4", 0.25, ("inverted", 0j, 2.5)),
    "rabbit": ("z^2 + c3, c3 the root of c^3 + 2c^2 + c + 1 with Im > 0", None, ("standard", 0j, 1.6)),
}


def preset_map(name):
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; see `juliageom catalog`")
    c = PRESETS[name][1]
    return RationalMap.quadratic(rabbit_parameter() if c is None else c)


# --------------------------------------------------------------------------
# configuration

# section -> key -> (parser, default); None defaults come from the preset
SCHEMA = {
    "map": {"preset": (str, None), "spec": (str, None)},
    "grid": {
        "chart": (str, None),
        "center": (parse_complex, None),
        "half_width": (float, None),
        "resolution": (int, 256),
    },
    "sample": {"count": (int, 20000), "method": (str, "mixed")},
    "orbits": {"rho_rec": (float, 1e-3), "max_period": (int, 6)},
    "shrink": {"radii": (lambda s: [float(x) for x in s.split(",")], [0.2]), "n_max": (int, 8), "per_depth_samples": (int, 6)},
    "john": {"samples": (int, 200), "builder": (str, "best_of_both"), "components": (int, 3)},
    "holder": {"samples": (int, 400), "slope_max": (float, 5.0)},
    "lc": {"pairs": (int, 20), "theta_max": (float, 0.05)},
    "summability": {"n": (int, 16), "alpha": (float, None), "convention": (str, "order")},
    "run": {"seed": (int, 0)},
}

RANGES = {
    ("grid", "half_width"): (0, math.inf),
    ("grid", "resolution"): (16, 8192),
    ("sample", "count"): (1, 10**7),
    ("orbits", "rho_rec"): (0, 2),
    ("orbits", "max_period"): (1, 12),
    ("shrink", "n_max"): (1, 60),
    ("shrink", "per_depth_samples"): (1, 1000),
    ("john", "samples"): (10, 10**6),
    ("john", "components"): (1, 1000),
    ("holder", "samples"): (30, 10**6),
    ("lc", "pairs"): (1, 10**5),
    ("lc", "theta_max"): (0, 2),
    ("summability", "n"): (1, 10**5),
    ("run", "seed"): (0, 2**64 - 1),
}


def load_config(path=None, preset=None, seed=None):
    """Parse and validate a config; returns {section: {key: value}}."""
    cp = configparser.ConfigParser(interpolation=None)
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ValidationError(f"cannot read config: {exc}") from None
    cfg = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ValidationError(f"unknown config section [{section}]")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ValidationError(f"unknown config key {section}.{key}")
    for section, keys in SCHEMA.items():
        cfg[section] = {}
        for key, (conv, default) in keys.items():
            raw = cp.get(section, key, fallback=None)
            if raw is None:
                cfg[section][key] = default
                continue
            try:
                cfg[section][key] = conv(raw.strip())
            except (ValueError, ValidationError) as exc:
                raise ValidationError(f"bad value for {section}.{key}: {exc}") from None
    if preset is not None:
        cfg["map"]["preset"] = preset
    if seed is not None:
        cfg["run"]["seed"] = seed
    m = cfg["map"]
    if (m["preset"] is None) == (m["spec"] is None):
        raise ValidationError("give exactly one of map.preset and map.spec")
    if m["preset"] is not None and m["preset"] not in PRESETS:
        raise ValidationError(f"unknown preset {m['preset']!r}")
    chart, center, hw = PRESETS[m["preset"]][2] if m["preset"] else ("standard", 0j, 2.0)
    g = cfg["grid"]
    g["chart"] = g["chart"] or chart
    g["center"] = center if g["center"] is None else g["center"]
    g["half_width"] = hw if g["half_width"] is None else g["half_width"]
    for (section, key), (lo, hi) in RANGES.items():
        v = cfg[section][key]
        if not lo <= v <= hi or (section, key) in (("grid", "half_width"), ("lc", "theta_max")) and v == lo:
            raise ValidationError(f"{section}.{key} = {v} out of range")
    for r in cfg["shrink"]["radii"]:
        if not 0 < r < 2:
            raise ValidationError(f"shrink radius {r} out of range (0, 2)")
    if cfg["sample"]["method"] not in ("inverse_iteration", "boundary_cells", "mixed"):
        raise ValidationError(f"unknown sample.method {cfg['sample']['method']!r}")
    if cfg["john"]["builder"] not in ("best_of_both", "delta_ascent", "dynamic_lift"):
        raise ValidationError(f"unknown john.builder {cfg['john']['builder']!r}")
    if cfg["summability"]["convention"] not in ("order", "local_degree"):
        raise ValidationError("summability.convention must be order or local_degree")
    GridSpec(g["chart"], g["center"], g["half_width"], g["resolution"])
    return cfg


def config_text(cfg):
    """Canonical text of a validated config (sorted, fully defaulted)."""
    lines = []
    for section in sorted(cfg):
        lines.append(f"[{section}]")
        for key in sorted(cfg[section]):
            v = cfg[section][key]
            if isinstance(v, complex):
                v = format_complex(v)
            elif isinstance(v, list):
                v = ",".join(repr(x) for x in v)
            lines.append(f"{key} = {v!r}" if isinstance(v, float) else f"{key} = {v}")
    return "\n".join(lines) + "\n"


def config_hash(cfg):
    return hashlib.sha256(config_text(cfg).encode()).hexdigest()


# --------------------------------------------------------------------------
# JSON


def _clean(obj):
    """Plain JSON types with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.12g}") if math.isfinite(x) else None
    if isinstance(obj, complex):
        return _clean([obj.real, obj.imag])
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def schema():
    return json.loads(resources.files("juliageom").joinpath("report.schema.json").read_text())


# --------------------------------------------------------------------------
# experiments


class Run:
    """One invocation: the map, the lazily built grid field, and timings."""

    def __init__(self, cfg, log=None):
        self.cfg = cfg
        self.seed = cfg["run"]["seed"]
        m = cfg["map"]
        self.f = preset_map(m["preset"]) if m["preset"] else parse_map(m["spec"])
        self.timings = {}
        self.log = log or (lambda msg: None)
        self._cycles = self._verdict = self._field = None

    def stage(self, name, fn):
        self.log(f"[{name}]")
        t = time.perf_counter()
        out = fn()
        self.timings[name] = time.perf_counter() - t
        return out

    @property
    def cycles(self):
        if self._cycles is None:
            self._cycles = self.stage("cycles", lambda: detect_cycles(self.f, self.cfg["orbits"]["max_period"]))
        return self._cycles

    @property
    def verdict(self):
        if self._verdict is None:
            rho = self.cfg["orbits"]["rho_rec"]
            self._verdict = self.stage("verdict", lambda: semi_hyperbolicity_verdict(self.f, self.cycles, rho))
        return self._verdict

    @property
    def field(self):
        if self._field is None:
            g, s = self.cfg["grid"], self.cfg["sample"]
            spec = GridSpec(g["chart"], g["center"], g["half_width"], g["resolution"])
            fl = self.stage("classify", lambda: classify_and_label(self.f, spec, self.cycles))
            smp = self.stage("sample", lambda: julia_sample(self.f, s["count"], self.seed, method=s["method"], field=fl))
            self.stage("distance", lambda: distance_field(fl, smp))
            self._field = fl
        return self._field

    def components(self):
        """The configured number of largest components."""
        comps = self.field.largest_components(self.cfg["john"]["components"])
        if not comps:
            raise NumericalError("the grid has no labeled Fatou component")
        return comps

    # reports
    def shrink(self):
        c = self.cfg["shrink"]
        out = []
        for r in c["radii"]:
            rep = self.stage(
                f"shrink r={r:g}",
                lambda: shrink_experiment(self.f, self.field.sample, r, c["n_max"], c["per_depth_samples"], self.seed),
            )
            out.append(rep.to_dict())
        return out

    def john(self):
        c = self.cfg["john"]
        return [
            self.stage(
                f"john {k}", lambda: john_estimate(self.f, self.field, k, c["samples"], self.seed, c["builder"], False)
            ).to_dict()
            for k in self.components()
        ]

    def holder(self):
        c = self.cfg["holder"]
        return [
            self.stage(
                f"holder {k}", lambda: holder_check(self.f, self.field, k, c["samples"], self.seed, c["slope_max"])
            ).to_dict()
            for k in self.components()
        ]

    def lc(self):
        c = self.cfg["lc"]
        fl = self.field
        pairs = random_julia_pairs(fl, fl.sample, c["pairs"], self.seed, c["theta_max"])
        reports, skipped = [], {}
        for a, b in pairs:
            try:
                reports.append(crosscut_continuum(self.f, fl, fl.sample, a, b).to_dict())
            except NumericalError as exc:
                skipped[type(exc).__name__] = skipped.get(type(exc).__name__, 0) + 1
        ratios = [r["ratio"] for r in reports]
        return {
            "pairs": len(pairs),
            "resolved": len(reports),
            "skipped": dict(sorted(skipped.items())),
            "max_ratio": max(ratios) if ratios else None,
            "continua": reports,
        }

    def summability(self):
        c = self.cfg["summability"]
        return self.stage(
            "summability",
            lambda: summability_report(self.f, self.verdict, c["n"], c["alpha"], c["convention"]),
        ).to_dict()


def bundle(run, command, timings=True):
    out = {
        "tool": "juliageom",
        "version": __version__,
        "command": command,
        "config_hash": config_hash(run.cfg),
        "seed": run.seed,
        "map": format_map(run.f),
        "preset": run.cfg["map"]["preset"],
    }
    if command == "analyze":
        out["verdict"] = run.verdict.to_dict()
        out["cycles"] = [c.to_dict() for c in run.cycles]
        out["shrink"] = run.shrink()
        out["john"] = run.john()
        out["holder"] = run.holder()
        out["lc"] = run.lc()
        try:
            out["summability"] = run.summability()
        except NumericalError as exc:
            out["summability"] = {"error": type(exc).__name__, "message": str(exc)}
    elif command == "shrink":
        out["shrink"] = run.shrink()
    elif command == "john":
        out["john"] = run.john()
    elif command == "holder":
        out["holder"] = run.holder()
    elif command == "lc":
        out["lc"] = run.lc()
    elif command == "summability":
        out["verdict"] = run.verdict.to_dict()
        out["summability"] = run.summability()
    if timings:
        out["timings"] = dict(run.timings)
    return out


def catalog():
    return {
        "presets": [
            {"name": name, "map": desc, "formula": format_map(preset_map(name))}
            for name, (desc, _, _) in PRESETS.items()
        ]
    }


def build_parser():
    p = argparse.ArgumentParser(prog="juliageom", description="Geometry of Julia sets and Fatou components.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="PATH", help="INI-style config file")
    p.add_argument("--preset", metavar="NAME", help="preset map (overrides map.preset)")
    p.add_argument("--out", metavar="DIR", help="output directory (default: stdout only)")
    p.add_argument("--seed", type=int, metavar="U64", help="base seed (overrides run.seed)")
    p.add_argument("--threads", type=int, default=1, metavar="N", help="worker cap (computation is single-threaded)")
    p.add_argument("--no-timings", action="store_true", help="omit wall-clock timings from the report")
    p.add_argument("--quiet", action="store_true", help="no stage log on stderr")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    log = (lambda msg: None) if args.quiet else (lambda msg: print(msg, file=sys.stderr))
    try:
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        if args.command == "catalog":
            text = dumps(catalog())
        else:
            cfg = load_config(args.config, args.preset, args.seed)
            run = Run(cfg, log)
            if args.command == "render":
                fl = run.field
                if not args.out:
                    raise ValidationError("render needs --out")
                os.makedirs(args.out, exist_ok=True)
                export_field(fl, os.path.join(args.out, "field.ppm"))
                text = dumps({"config_hash": config_hash(cfg), "image": "field.ppm"})
            else:
                text = dumps(bundle(run, args.command, not args.no_timings))
    except ValidationError as exc:
        print(dumps({"error": type(exc).__name__, "message": str(exc)}), end="")
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(dumps({"error": type(exc).__name__, "message": str(exc)}), end="")
        return EXIT_NUMERICAL
    except JuliaGeomError as exc:
        print(dumps({"error": type(exc).__name__, "message": str(exc)}), end="")
        return EXIT_NUMERICAL
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.json"), "w") as fh:
            fh.write(text)
        if args.command == "analyze":
            export_field(run.field, os.path.join(args.out, "field.ppm"))
    print(text, end="")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
