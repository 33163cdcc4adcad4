"""Run configuration: flat key-value text with sections.

Sections are [set], [schedule], [domain], [quadrature], [suite] and
[output]; every key can also be overridden from the command line.  A
parsed configuration echoes back to text that re-parses to an equivalent
configuration, which is what makes archived runs reproducible.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, replace

from .field import CoefficientSchedule
from .quadrature import ExcisionPolicy
from .sets import CantorDust, CompactSetSpec, Disk, FiniteSet, Polyline, UnionSet
from .verify import SUITE_GROUPS


class ConfigError(ValueError):
    pass


_KNOWN_KEYS = {
    "set": {"variant", "points", "vertices", "center", "width", "depth",
            "radius", "parts"},
    "schedule": {"ratio", "values"},
    "domain": {"radius", "n_points", "n_terms", "tail_target", "exclusion"},
    "quadrature": {"eps0", "levels", "target_rel_err"},
    "suite": {"items", "bumps", "seed", "fault_inject", "identity_samples",
              "classical_samples"},
    "output": {"dir"},
}

DEFAULT_POINTS = ((0.0, 0.0), (0.02, 0.0), (0.0, 0.02), (-0.02, 0.0))


@dataclass(frozen=True)
class RunConfig:
    set_spec: CompactSetSpec = FiniteSet(DEFAULT_POINTS)
    schedule: CoefficientSchedule = CoefficientSchedule(ratio=0.25)
    radius: float = 0.05
    n_points: int = 16
    n_terms: int | None = None
    tail_target: float | None = None
    exclusion: float = 1e-6
    policy: ExcisionPolicy = ExcisionPolicy()
    suite_items: tuple[str, ...] = SUITE_GROUPS
    bumps: int = 10
    seed: int = 1318
    fault_inject: str | None = None
    identity_samples: int = 10_000
    classical_samples: int = 200
    out_dir: str = "out"

    def __post_init__(self):
        if not (0.0 < self.radius <= 1.0 / math.e):
            raise ConfigError("domain radius must be in (0, 1/e]")
        q = self.schedule.ratio
        if q is not None and not (0.0 < q < 1.0):
            raise ConfigError("ratio must be in (0,1)")
        if self.n_points < 1:
            raise ConfigError("n_points must be >= 1")
        unknown = set(self.suite_items) - set(SUITE_GROUPS)
        if unknown:
            raise ConfigError(f"unknown suite items: {sorted(unknown)}")


def _parse_point(text: str) -> tuple[float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"expected 'x,y' point, got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_point_list(text: str) -> tuple[tuple[float, float], ...]:
    return tuple(_parse_point(chunk) for chunk in text.split(";") if chunk.strip())


def _parse_set_section(cp: configparser.ConfigParser, section: str) -> CompactSetSpec:
    if section not in cp:
        raise ConfigError(f"missing config section [{section}]")
    sec = cp[section]
    variant = sec.get("variant", "finite").strip().lower()
    if variant == "finite":
        pts = _parse_point_list(sec.get("points", ""))
        if not pts:
            raise ConfigError("finite set needs a 'points' key")
        return FiniteSet(pts)
    if variant == "polyline":
        verts = _parse_point_list(sec.get("vertices", ""))
        if len(verts) < 2:
            raise ConfigError("polyline needs >= 2 vertices")
        return Polyline(verts)
    if variant == "cantor_dust":
        return CantorDust(center=_parse_point(sec.get("center", "0,0")),
                          width=sec.getfloat("width"),
                          depth=sec.getint("depth"))
    if variant == "disk":
        return Disk(center=_parse_point(sec.get("center", "0,0")),
                    radius=sec.getfloat("radius"))
    if variant == "union":
        n = sec.getint("parts")
        parts = tuple(_parse_set_section(cp, f"{section}.part{i + 1}")
                      for i in range(n))
        return UnionSet(parts)
    raise ConfigError(f"unknown set variant {variant!r}")


def _spec_to_sections(spec: CompactSetSpec, section: str) -> dict[str, dict[str, str]]:
    if isinstance(spec, FiniteSet):
        return {section: {"variant": "finite", "points": "; ".join(
            f"{p[0]:.17g},{p[1]:.17g}" for p in spec.points)}}
    if isinstance(spec, Polyline):
        return {section: {"variant": "polyline", "vertices": "; ".join(
            f"{v[0]:.17g},{v[1]:.17g}" for v in spec.vertices)}}
    if isinstance(spec, CantorDust):
        return {section: {"variant": "cantor_dust",
                          "center": f"{spec.center[0]:.17g},{spec.center[1]:.17g}",
                          "width": f"{spec.width:.17g}",
                          "depth": str(spec.depth)}}
    if isinstance(spec, Disk):
        return {section: {"variant": "disk",
                          "center": f"{spec.center[0]:.17g},{spec.center[1]:.17g}",
                          "radius": f"{spec.radius:.17g}"}}
    out = {section: {"variant": "union", "parts": str(len(spec.parts))}}
    for i, part in enumerate(spec.parts):
        out.update(_spec_to_sections(part, f"{section}.part{i + 1}"))
    return out


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    cp.read_string(text)
    for section in cp.sections():
        base = section.split(".")[0]
        if base not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        allowed = _KNOWN_KEYS[base]
        for key in cp[section]:
            if key not in allowed:
                raise ConfigError(f"unknown config key '{key}' in [{section}]")

    kwargs: dict = {}
    if "set" in cp:
        kwargs["set_spec"] = _parse_set_section(cp, "set")
    if "schedule" in cp:
        sec = cp["schedule"]
        if "values" in sec:
            vals = tuple(float(v) for v in sec.get("values").split(",") if v.strip())
            kwargs["schedule"] = CoefficientSchedule(values=vals)
        elif "ratio" in sec:
            q = sec.getfloat("ratio")
            if not (0.0 < q < 1.0):
                raise ConfigError("ratio must be in (0,1)")
            kwargs["schedule"] = CoefficientSchedule(ratio=q)
    if "domain" in cp:
        sec = cp["domain"]
        if "radius" in sec:
            r = sec.getfloat("radius")
            if not (0.0 < r <= 1.0 / math.e):
                raise ConfigError("domain radius must be in (0, 1/e]")
            kwargs["radius"] = r
        if "n_points" in sec:
            kwargs["n_points"] = sec.getint("n_points")
        if "n_terms" in sec and "tail_target" in sec:
            raise ConfigError("give n_terms or tail_target, not both")
        if "n_terms" in sec:
            kwargs["n_terms"] = sec.getint("n_terms")
        if "tail_target" in sec:
            kwargs["tail_target"] = sec.getfloat("tail_target")
        if "exclusion" in sec:
            kwargs["exclusion"] = sec.getfloat("exclusion")
    if "quadrature" in cp:
        sec = cp["quadrature"]
        kwargs["policy"] = ExcisionPolicy(
            eps0=sec.getfloat("eps0", 1e-3),
            levels=sec.getint("levels", 5),
            target_rel_err=sec.getfloat("target_rel_err", 1e-3))
    if "suite" in cp:
        sec = cp["suite"]
        items = sec.get("items", "all").strip()
        kwargs["suite_items"] = (SUITE_GROUPS if items == "all" else
                                 tuple(s.strip() for s in items.split(",") if s.strip()))
        kwargs["bumps"] = sec.getint("bumps", 10)
        kwargs["seed"] = sec.getint("seed", 1318)
        if "fault_inject" in sec:
            kwargs["fault_inject"] = sec.get("fault_inject").strip() or None
        if "identity_samples" in sec:
            kwargs["identity_samples"] = sec.getint("identity_samples")
        if "classical_samples" in sec:
            kwargs["classical_samples"] = sec.getint("classical_samples")
    if "output" in cp:
        kwargs["out_dir"] = cp["output"].get("dir", "out")
    return RunConfig(**kwargs)


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_to_text(cfg: RunConfig) -> str:
    cp = configparser.ConfigParser()
    for section, entries in _spec_to_sections(cfg.set_spec, "set").items():
        cp[section] = entries
    if cfg.schedule.values is not None:
        cp["schedule"] = {"values": ", ".join(f"{v:.17g}" for v in cfg.schedule.values)}
    else:
        cp["schedule"] = {"ratio": f"{cfg.schedule.ratio:.17g}"}
    dom = {"radius": f"{cfg.radius:.17g}", "n_points": str(cfg.n_points),
           "exclusion": f"{cfg.exclusion:.17g}"}
    if cfg.n_terms is not None:
        dom["n_terms"] = str(cfg.n_terms)
    if cfg.tail_target is not None:
        dom["tail_target"] = f"{cfg.tail_target:.17g}"
    cp["domain"] = dom
    cp["quadrature"] = {"eps0": f"{cfg.policy.eps0:.17g}",
                        "levels": str(cfg.policy.levels),
                        "target_rel_err": f"{cfg.policy.target_rel_err:.17g}"}
    suite = {"items": ",".join(cfg.suite_items), "bumps": str(cfg.bumps),
             "seed": str(cfg.seed),
             "identity_samples": str(cfg.identity_samples),
             "classical_samples": str(cfg.classical_samples)}
    if cfg.fault_inject:
        suite["fault_inject"] = cfg.fault_inject
    cp["suite"] = suite
    cp["output"] = {"dir": cfg.out_dir}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def apply_overrides(cfg: RunConfig, seed: int | None = None,
                    out_dir: str | None = None,
                    fault_inject: str | None = None) -> RunConfig:
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if out_dir is not None:
        changes["out_dir"] = out_dir
    if fault_inject is not None:
        changes["fault_inject"] = fault_inject
    return replace(cfg, **changes) if changes else cfg


def build_solution(cfg: RunConfig):
    """Materialize the potential and solution described by a config."""
    from .field import build_potential, truncation_index
    from .solution import Solution

    potential, shift = build_potential(cfg.set_spec, cfg.schedule,
                                       cfg.radius, cfg.n_points)
    n_terms = cfg.n_terms
    if n_terms is None and cfg.tail_target is not None:
        n_terms = truncation_index(potential, cfg.tail_target, cfg.exclusion)
    if n_terms is not None and not (1 <= n_terms <= potential.n_points):
        raise ConfigError(
            f"n_terms must be in 1..{potential.n_points} (enumerated points)")
    return Solution(potential, n_terms), shift
