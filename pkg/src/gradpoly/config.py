"""Run configuration: a flat ``section.key = value`` text format and presets.

Grammar
-------
One assignment per line::

    # comment
    geometry.l1 = 5.0
    material.model = double_well     # trailing comments are allowed

Blank lines and ``#`` comments are ignored. Keys are case-sensitive and must
come from :data:`SCHEMA`; each key may appear once. Values are parsed by
type: ``int`` (decimal integer), ``float`` (anything ``float()`` accepts),
``bool`` (``true``/``false``), ``choice`` (one of a fixed set of words),
``str`` and ``list`` (comma separated words). ``solver.perturbation_amplitude``
also accepts ``none``, meaning 1e-4 of the smallest element edge.

:func:`parse_config` reports every problem at once (with line numbers) by
raising :class:`~gradpoly.errors.ConfigError`; :func:`serialize` writes a
configuration back so that ``parse_config(serialize(c)) == c``.
"""
from dataclasses import dataclass, fields

from .errors import ConfigError
from .materials import MaterialParams, Model
from .solver import BC_KINDS, SolverConfig

__all__ = ["RunConfig", "SCHEMA", "parse_config", "serialize", "PRESETS",
           "preset", "preset_names", "load_config"]

LOAD_KINDS = ("biaxial", "relaxation")
OUTPUT_FIELDS = ("displacement", "F11", "F12", "detF", "Ceq", "Smnorm")

# key -> (type, required, default, choices)
SCHEMA = {
    "geometry.l1": ("float", True, None, None),
    "geometry.l2": ("float", True, None, None),
    "geometry.l3": ("float", True, None, None),
    "mesh.nx": ("int", True, None, None),
    "mesh.ny": ("int", True, None, None),
    "mesh.nz": ("int", True, None, None),
    "mesh.quadrature": ("int", False, 3, (2, 3)),
    "material.model": ("choice", True, None, tuple(m.value for m in Model)),
    "material.lambda_lame": ("float", False, 0.0, None),
    "material.mu_lame": ("float", False, 0.0, None),
    "material.alpha": ("float", False, 0.0, None),
    "material.eps_well": ("float", False, 0.0, None),
    "material.H_chi": ("float", False, 1.0, None),
    "material.K_grad": ("float", False, 0.0, None),
    "material.K_vol": ("float", False, 0.0, None),
    "bc.kind": ("choice", True, None, tuple(BC_KINDS)),
    "load.kind": ("choice", True, None, LOAD_KINDS),
    "load.total": ("float", False, 0.0, None),
    "load.steps": ("int", False, 20, None),
    "solver.newton_tol": ("float", False, 1e-8, None),
    "solver.newton_abs_tol": ("float", False, 1e-10, None),
    "solver.max_iters": ("int", False, 30, None),
    "solver.perturbation_amplitude": ("optfloat", False, None, None),
    "solver.step_halving_max": ("int", False, 8, None),
    "solver.seed": ("int", False, 0, None),
    "solver.energy_rtol": ("float", False, 1e-10, None),
    "solver.modified_newton": ("bool", False, True, None),
    "solver.shift_max": ("float", False, 1e6, None),
    "output.dir": ("str", False, ".", None),
    "output.prefix": ("str", False, "run", None),
    "output.fields": ("list", False, OUTPUT_FIELDS, OUTPUT_FIELDS),
}


@dataclass(frozen=True)
class RunConfig:
    lengths: tuple
    divisions: tuple
    material: MaterialParams
    bc_kind: str
    load_kind: str
    load_total: float = 0.0
    solver: SolverConfig = SolverConfig()
    quadrature: int = 3
    output_dir: str = "."
    output_prefix: str = "run"
    output_fields: tuple = OUTPUT_FIELDS

    @property
    def load_steps(self):
        return self.solver.load_steps

    @property
    def internal_length(self):
        return self.material.internal_length

    def to_dict(self):
        """Flat ``{dotted key: value}`` view in :data:`SCHEMA` order."""
        m, s = self.material, self.solver
        d = {
            "geometry.l1": self.lengths[0], "geometry.l2": self.lengths[1],
            "geometry.l3": self.lengths[2],
            "mesh.nx": self.divisions[0], "mesh.ny": self.divisions[1],
            "mesh.nz": self.divisions[2], "mesh.quadrature": self.quadrature,
            "material.model": m.model.value,
            "bc.kind": self.bc_kind, "load.kind": self.load_kind,
            "load.total": self.load_total, "load.steps": s.load_steps,
            "output.dir": self.output_dir, "output.prefix": self.output_prefix,
            "output.fields": tuple(self.output_fields),
        }
        for f in fields(MaterialParams):
            if f.name != "model":
                d[f"material.{f.name}"] = getattr(m, f.name)
        for f in fields(SolverConfig):
            if f.name != "load_steps":
                d[f"solver.{f.name}"] = getattr(s, f.name)
        return {k: d[k] for k in SCHEMA}


# ------------------------------------------------------------ parsing
def _convert(kind, raw, choices):
    if kind == "int":
        v = int(raw, 10)
    elif kind == "float":
        v = float(raw)
    elif kind == "optfloat":
        v = None if raw.lower() == "none" else float(raw)
    elif kind == "bool":
        low = raw.lower()
        if low not in ("true", "false"):
            raise ValueError(f"expected true or false, got {raw!r}")
        v = low == "true"
    elif kind == "list":
        v = tuple(w.strip() for w in raw.split(",") if w.strip())
        bad = [w for w in v if choices and w not in choices]
        if bad:
            raise ValueError(f"unknown entries {bad}; allowed: {', '.join(choices)}")
        return v
    else:
        v = raw
    if kind == "choice" and v not in choices:
        raise ValueError(f"expected one of {', '.join(choices)}, got {raw!r}")
    if kind == "int" and choices and v not in choices:
        raise ValueError(f"expected one of {choices}, got {v}")
    return v


def _build(values, lines, problems):
    """Check values semantically and build the RunConfig if nothing is wrong.

    Keys that failed to parse are absent from ``values``; checks that need
    them are skipped so that the remaining problems are still reported.
    """
    def bad(key, msg):
        problems.append(("InvalidValue", lines.get(key), f"{key}: {msg}"))

    for key in ("geometry.l1", "geometry.l2", "geometry.l3"):
        if key in values and not values[key] > 0:
            bad(key, "must be positive")
    for key in ("mesh.nx", "mesh.ny", "mesh.nz", "load.steps"):
        if key in values and values[key] < 1:
            bad(key, "must be >= 1")
    if (values.get("load.kind") == "biaxial" and "load.total" in values
            and not 0 <= values["load.total"] < 1):
        bad("load.total", "compression fraction must lie in [0, 1)")
    mat_keys = [k for k in SCHEMA if k.startswith("material.")]
    material = None
    if all(k in values for k in mat_keys):
        try:
            material = MaterialParams(**{k.split(".", 1)[1]: values[k] for k in mat_keys})
        except ValueError as exc:
            bad("material.model", str(exc))
    sol_keys = [k for k in SCHEMA if k.startswith("solver.")]
    solver = None
    if all(k in values for k in sol_keys) and values.get("load.steps", 0) >= 1:
        try:
            solver = SolverConfig(load_steps=values["load.steps"],
                                  **{k.split(".", 1)[1]: values[k] for k in sol_keys})
        except ValueError as exc:
            bad("solver.newton_tol", str(exc))
    if problems:
        return None
    return RunConfig(
        lengths=(values["geometry.l1"], values["geometry.l2"], values["geometry.l3"]),
        divisions=(values["mesh.nx"], values["mesh.ny"], values["mesh.nz"]),
        material=material, bc_kind=values["bc.kind"], load_kind=values["load.kind"],
        load_total=values["load.total"], solver=solver,
        quadrature=values["mesh.quadrature"], output_dir=values["output.dir"],
        output_prefix=values["output.prefix"], output_fields=values["output.fields"])


def parse_config(text):
    """Parse configuration text into a validated :class:`RunConfig`.

    Raises
    ------
    ConfigError
        Listing every ``UnknownKey``, ``TypeMismatch``, ``MissingRequired``,
        ``InvalidValue`` and ``SyntaxError`` problem found.
    """
    problems = []
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(("SyntaxError", lineno, f"expected 'key = value', got {raw.strip()!r}"))
            continue
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            problems.append(("UnknownKey", lineno, f"unknown key {key!r}"))
            continue
        if key in lines:
            problems.append(("InvalidValue", lineno,
                             f"{key}: duplicate key (first set on line {lines[key]})"))
            continue
        kind, _, _, choices = SCHEMA[key]
        lines[key] = lineno
        try:
            values[key] = _convert(kind, val, choices)
        except ValueError as exc:
            problems.append(("TypeMismatch", lineno, f"{key}: expected {kind}: {exc}"))
    for key, (kind, required, default, _) in SCHEMA.items():
        if key in values or key in lines:
            continue
        if required:
            problems.append(("MissingRequired", None, f"missing required key {key!r}"))
        else:
            values[key] = default
    cfg = _build(values, lines, problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _format(kind, v):
    if kind in ("float", "optfloat"):
        return "none" if v is None else repr(float(v))
    if kind == "bool":
        return "true" if v else "false"
    if kind == "list":
        return v if isinstance(v, str) else ", ".join(v)
    return str(v)


def serialize(cfg):
    """Configuration text that parses back to ``cfg``."""
    out = []
    section = None
    for key, value in cfg.to_dict().items():
        head = key.split(".", 1)[0]
        if head != section:
            if section is not None:
                out.append("")
            out.append(f"# {head}")
            section = head
        out.append(f"{key} = {_format(SCHEMA[key][0], value)}")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------ presets
_STVK = {
    "geometry.l1": 1.0, "geometry.l2": 1.0, "geometry.l3": 0.1,
    "mesh.nx": 10, "mesh.ny": 10, "mesh.nz": 1,
    "material.model": "stvk", "material.lambda_lame": 1.5, "material.mu_lame": 1.0,
    "bc.kind": "biaxial_affine", "load.kind": "biaxial", "load.steps": 20,
    "solver.max_iters": 100,
}
# local model: chi is decoupled by a negligible penalty and no gradient term
_STVK_LOCAL = {"material.H_chi": 1e-3, "material.K_grad": 0.0}
_STVK_GRAD = {"material.H_chi": 10.0, "material.K_grad": 1.0}

_DW = {
    "geometry.l1": 5.0, "geometry.l2": 5.0, "geometry.l3": 0.5,
    "material.model": "double_well", "material.alpha": 1e9, "material.eps_well": 0.05,
    "material.H_chi": 1e5, "load.kind": "relaxation", "load.steps": 1,
    "solver.max_iters": 300,
}

PRESETS = {
    "stvk_fig1": {**_STVK, **_STVK_LOCAL, "load.total": 0.2175, "output.prefix": "stvk_fig1"},
    "stvk_fig2": {**_STVK, **_STVK_GRAD, "load.total": 0.25, "output.prefix": "stvk_fig2"},
    "stvk_fig2_local": {**_STVK, **_STVK_LOCAL, "load.total": 0.25,
                        "output.prefix": "stvk_fig2_local"},
    "stvk_fig2_volumetric": {**_STVK, **_STVK_LOCAL, "material.K_vol": 1.0, "load.total": 0.25,
                             "output.prefix": "stvk_fig2_volumetric"},
}
for _n in (10, 20, 50):
    PRESETS[f"dw_local_mesh{_n}"] = {
        **_DW, "mesh.nx": _n, "mesh.ny": _n, "mesh.nz": 2, "material.K_grad": 0.0,
        "bc.kind": "fixed_top_bottom", "output.prefix": f"dw_local_mesh{_n}"}
for _k in (1, 10, 50, 250):
    PRESETS[f"dw_grad_K{_k}"] = {
        **_DW, "mesh.nx": 20, "mesh.ny": 20, "mesh.nz": 1, "material.K_grad": float(_k),
        "bc.kind": "fixed_all", "output.prefix": f"dw_grad_K{_k}"}


def preset_names():
    return sorted(PRESETS)


def preset(name, **overrides):
    """The :class:`RunConfig` of a named experiment; ``overrides`` use dotted keys
    with ``__`` for the dot (``mesh__nx=4``)."""
    try:
        entries = dict(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}") from None
    entries.update({k.replace("__", "."): v for k, v in overrides.items()})
    text = "\n".join(f"{k} = {_format(SCHEMA[k][0], v)}" for k, v in entries.items())
    return parse_config(text)
