"""Config parsing: fractal descriptions and pipeline run settings.

Both files are INI-style (key = value under sections).  Coordinates are
exact: each component is a rational, optionally plus a rational multiple of
sqrt3, e.g. ``1/4,1/4*sqrt3``.  Dimension entries accept a float literal,
``log(p)/log(q)``, ``dw`` (for d_J), or ``estimate``.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .exact import Vec2, parse_q3
from .geometry import FractalSystem, build_system
from .subordinators import SubordinatorSpec

N_MAX = 7  # deeper graphs exceed the dense-eigendecomposition budget


class ConfigError(ValueError):
    pass


_LOG_RE = re.compile(r"^log\((\d+)\)\s*/\s*log\((\d+)\)$")


def parse_dimension(text: str, dw_value: float | None = None) -> float | str:
    s = text.strip().lower()
    if s == "estimate":
        return "estimate"
    if s == "dw":
        if dw_value is None:
            raise ConfigError("dj = dw requires dw to be resolved first")
        return dw_value
    m = _LOG_RE.match(s)
    if m:
        p, q = int(m.group(1)), int(m.group(2))
        return math.log(p) / math.log(q)
    try:
        return float(s)
    except ValueError as exc:
        raise ConfigError(f"cannot parse dimension value {text!r}") from exc


def parse_translations(text: str) -> list[Vec2]:
    out = []
    for chunk in text.split(";"):
        coords = chunk.split(",")
        if len(coords) != 2:
            raise ConfigError(f"translation needs two coordinates: {chunk!r}")
        out.append(Vec2(parse_q3(coords[0]), parse_q3(coords[1])))
    return out


def load_fractal_config(path: str | Path) -> FractalSystem:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"fractal config not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path)
    if "fractal" not in parser:
        raise ConfigError(f"{path}: missing [fractal] section")
    sec = parser["fractal"]
    for required in ("N", "L", "translations", "dw"):
        if sec.get(required) is None:
            raise ConfigError(f"{path}: [fractal] is missing {required!r}")
    try:
        name = sec.get("name", path.stem)
        n_declared = sec.getint("N")
        L = Fraction(sec.get("L"))
        translations = parse_translations(sec.get("translations"))
        dw = parse_dimension(sec.get("dw"))
        dj_text = sec.get("dj", "dw")
        osc = sec.getboolean("osc_attested", fallback=False)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if len(translations) != n_declared:
        raise ConfigError(
            f"{path}: N = {n_declared} but {len(translations)} translations given"
        )
    if dw == "estimate":
        # resolved by a walk-dimension estimate on a placeholder system
        from .kernels import estimate_walk_dimension

        probe = build_system(name, L, translations, walk_dim=2.0,
                             chemical_exp=2.0, osc_attested=osc)
        dw = estimate_walk_dimension(probe, 5).estimate
    dj = parse_dimension(dj_text, float(dw))
    if dj == "estimate":
        dj = float(dw)
    return build_system(
        name, L, translations, walk_dim=float(dw), chemical_exp=float(dj),
        osc_attested=osc,
    )


def parse_subordinator(text: str) -> SubordinatorSpec:
    s = text.strip()
    kind, _, rest = s.partition(":")
    kind = kind.strip()
    params = [p.strip() for p in rest.split(",") if p.strip()]
    try:
        if kind == "stable":
            (alpha,) = params
            return SubordinatorSpec("stable", float(alpha))
        if kind == "relativistic":
            alpha, m = params
            return SubordinatorSpec("relativistic", float(alpha), float(m))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad subordinator spec {text!r}: {exc}") from exc
    raise ConfigError(f"unknown subordinator kind in {text!r}")


@dataclass
class RunConfig:
    """Everything one reproducible pipeline run needs."""

    fractal_path: Path
    system: FractalSystem
    M: int = 1
    n: int = 5
    window: int = 2
    seed: int = 20240801
    threads: int = 1
    out_dir: Path = Path("out")
    subordinators: list[SubordinatorSpec] = field(default_factory=list)
    n_times: int = 12
    t_min: float = 0.1
    flat_span: float = 10.0
    kernel_times: tuple[float, ...] = (0.5, 1.0, 2.0, 5.0)
    table_pairs: int = 300
    crosscheck_samples: int = 8
    spread_threshold: float = 10.0
    stability_threshold: float = 0.5
    domination_tol: float = 1e-8
    bracket_tol: float = 0.8
    metric: str = "geodesic"
    raw_text: str = ""

    def validate(self) -> None:
        if not (0 <= self.M < self.window):
            raise ConfigError(f"need 0 <= M < window, got M={self.M} window={self.window}")
        if not (1 <= self.n <= N_MAX):
            raise ConfigError(f"depth n must be in [1, {N_MAX}], got {self.n}")
        if self.window + self.n > N_MAX:
            raise ConfigError(
                f"window {self.window} at depth {self.n} exceeds the "
                f"eigendecomposition budget (window + n <= {N_MAX})"
            )
        if self.spread_threshold <= 1 or self.stability_threshold <= 0:
            raise ConfigError("thresholds must exceed 1 (spread) and 0 (stability)")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not self.subordinators:
            raise ConfigError("at least one subordinator spec required")
        if self.metric not in ("geodesic", "euclidean"):
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.t_min <= 0:
            raise ConfigError("t_min must be positive")


def load_run_config(path: str | Path, out_override=None, threads_override=None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"run config not found: {path}")
    text = path.read_text()
    parser = configparser.ConfigParser()
    parser.read_string(text)
    if "run" not in parser:
        raise ConfigError(f"{path}: missing [run] section")
    run = parser["run"]
    fractal_rel = run.get("fractal")
    if fractal_rel is None:
        raise ConfigError(f"{path}: [run] must name a fractal config")
    fractal_path = (path.parent / fractal_rel).resolve()
    system = load_fractal_config(fractal_path)

    grids = parser["grids"] if "grids" in parser else {}
    thresholds = parser["thresholds"] if "thresholds" in parser else {}
    subs_text = (
        parser["subordinators"].get("specs", "")
        if "subordinators" in parser
        else "stable:0.5"
    )
    subs = [parse_subordinator(s) for s in subs_text.split(";") if s.strip()]

    def _get(section, key, cast, default):
        if key not in section:
            return default
        try:
            return cast(section[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: bad value for {key}: {exc}") from exc

    cfg = RunConfig(
        fractal_path=fractal_path,
        system=system,
        M=_get(run, "m", int, 1),
        n=_get(run, "n", int, 5),
        window=_get(run, "window", int, 2),
        seed=_get(run, "seed", int, 20240801),
        threads=threads_override or _get(run, "threads", int, 1),
        out_dir=Path(out_override or run.get("out", "out")),
        subordinators=subs,
        n_times=_get(grids, "n_times", int, 12),
        t_min=_get(grids, "t_min", float, 0.1),
        flat_span=_get(grids, "flat_span", float, 10.0),
        kernel_times=tuple(
            float(x) for x in _get(grids, "kernel_times", str, "0.5,1,2,5").split(",")
        ),
        table_pairs=_get(grids, "table_pairs", int, 300),
        crosscheck_samples=_get(grids, "crosscheck_samples", int, 8),
        spread_threshold=_get(thresholds, "spread", float, 10.0),
        stability_threshold=_get(thresholds, "stability", float, 0.5),
        domination_tol=_get(thresholds, "domination_tol", float, 1e-8),
        bracket_tol=_get(thresholds, "bracket_tol", float, 0.8),
        metric=_get(run, "metric", str, "geodesic"),
        raw_text=text,
    )
    cfg.validate()
    return cfg
