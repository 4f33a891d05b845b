"""Run configuration: parsing, assumption gatekeeping, echoing.

The on-disk format is a TOML subset: named sections, scalar or flat
array values, no nesting beyond one table level.  ``load_config``
normalizes a file against the defaults below and runs every
assumption-bearing value through the corresponding module validator
before anything is built; violations come back as a structured report
naming the assumption label (A1)-(A6) of the checklist:

    (A1) domain geometry (rectangle sides and resolution),
    (A2) dissipation density: positive one-homogeneous with a
         positive activation threshold,
    (A3) bulk energy: polynomial growth, derivative growth, bounded
         monotonicity deficit mu, and the margin mu * C_P^2 < 1,
    (A4) elliptic coefficients: major symmetry, ellipticity kappa > 0,
         Lipschitz time dependence,
    (A5) loading time-regularity indices a > 1 and p >= 2,
    (A6) initial state: admissible node field (zero trace is implicit
         in the interior-node layout).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib as tomli  # stdlib from Python 3.11
except ModuleNotFoundError:
    import tomli

from . import dissipation as dsp
from . import elliptic, energy, loading
from .grid import Field, Grid, TimePartition, poincare_constant, read_snapshot
from .rothe import Problem, SolverConfig

__all__ = [
    "ConfigError",
    "Violation",
    "ValidationReport",
    "RunConfig",
    "DEFAULTS",
    "load_config",
    "load_config_text",
    "validate_config",
    "echo_config",
]


class ConfigError(ValueError):
    """Malformed configuration text or unknown keys."""


DEFAULTS: dict = {
    "grid": {"lx": 1.0, "ly": 1.0, "nx": 63, "ny": 63},
    "model": {"m": 1},
    "energy": {"kind": "double_well", "gamma": 0.05},
    "dissipation": {"kind": "euclidean", "c": 1.0, "weights": []},
    "operator": {
        "kind": "laplacian",
        "matrix": [],
        "epsilon": 0.0,
        "omega": 0.0,
    },
    "loading": {
        "time_kind": "ramp",
        "rate": 1.0,
        "omega": 1.0,
        "space_kind": "sine",
        "amplitude": 1.0,
        "kx": 1,
        "ky": 1,
        "x0": 0.5,
        "y0": 0.5,
        "sigma": 0.1,
        "direction": [],
        "a": 2.0,
        "p": 4.0,
    },
    "time": {"t_final": 1.0, "n_steps": 16},
    "initial": {"snapshot": ""},
    "solver": {
        "tol": 0.0,  # 0 means the solver default (relative to the yield bound)
        "max_iters": 200000,
        "backtrack": 0.5,
        "accel": False,
        "allow_nonconvex": False,
    },
    "diagnostics": {
        "alpha": 0.25,
        "holder_a": 2.0,
        "n_test_fields": 50,
        "seed": 0,
    },
    "output": {"directory": "out", "snapshot_every": 0},
}

_KINDS = {
    ("energy", "kind"): ("double_well", "quadratic"),
    ("dissipation", "kind"): ("euclidean", "weighted_l1"),
    ("operator", "kind"): ("laplacian", "constant_anisotropic", "time_modulated"),
    ("loading", "time_kind"): ("constant", "ramp", "sine"),
    ("loading", "space_kind"): ("sine", "bump", "uniform"),
}


@dataclass(frozen=True)
class Violation:
    """One failed assumption check."""

    label: str  # "(A1)" ... "(A6)"
    key: str  # dotted config key, e.g. "energy.gamma"
    observed: str
    required: str
    value: float | None = None  # numeric witness where one exists

    def line(self) -> str:
        return f"{self.label} {self.key}: observed {self.observed}, required {self.required}"


@dataclass
class ValidationReport:
    """Outcome of the assumption gate.

    ``checks`` lists every (label, key, description) examined, so the
    mapping of each label to at least one concrete check is visible in
    the report itself, not only in the docs.
    """

    violations: list[Violation] = field(default_factory=list)
    checks: list[tuple[str, str, str]] = field(default_factory=list)
    mu_cp_sq: float | None = None
    cp: float | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        lines = []
        if self.ok:
            lines.append(f"all assumption checks passed ({len(self.checks)} checks)")
        else:
            lines.append(f"{len(self.violations)} assumption violation(s):")
            lines.extend("  " + v.line() for v in self.violations)
        if self.mu_cp_sq is not None:
            lines.append(f"  mu*C_P^2 = {self.mu_cp_sq:.17g} (threshold 1)")
        return "\n".join(lines)


def _merge_defaults(raw: dict) -> dict:
    """Fill defaults, reject unknown sections or keys, normalize types."""
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a table of sections")
    out = {}
    for section, defaults in DEFAULTS.items():
        given = raw.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"section [{section}] must be a table")
        unknown = set(given) - set(defaults)
        if unknown:
            raise ConfigError(
                f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}"
            )
        merged = {}
        for key, dval in defaults.items():
            v = given.get(key, dval)
            if isinstance(dval, bool):
                if not isinstance(v, bool):
                    raise ConfigError(f"{section}.{key} must be a boolean")
            elif isinstance(dval, int):
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ConfigError(f"{section}.{key} must be an integer")
            elif isinstance(dval, float):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"{section}.{key} must be a number")
                v = float(v)
            elif isinstance(dval, str):
                if not isinstance(v, str):
                    raise ConfigError(f"{section}.{key} must be a string")
                if (section, key) in _KINDS and v not in _KINDS[(section, key)]:
                    raise ConfigError(
                        f"{section}.{key} must be one of {_KINDS[(section, key)]}, got {v!r}"
                    )
            elif isinstance(dval, list):
                if not isinstance(v, list):
                    raise ConfigError(f"{section}.{key} must be an array")
                v = _normalize_numbers(v, f"{section}.{key}")
            merged[key] = v
        out[section] = merged
    unknown_sections = set(raw) - set(DEFAULTS)
    if unknown_sections:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown_sections))}")
    return out


def _normalize_numbers(v, where):
    out = []
    for item in v:
        if isinstance(item, list):
            out.append(_normalize_numbers(item, where))
        elif isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{where} must contain only numbers")
        else:
            out.append(float(item))
    return out


def _structural_check(data: dict) -> None:
    """Bounds that are plumbing, not assumptions; bad values raise."""
    if data["model"]["m"] < 1:
        raise ConfigError("model.m must be >= 1")
    s = data["solver"]
    if s["tol"] < 0:
        raise ConfigError("solver.tol must be >= 0 (0 selects the default)")
    if s["max_iters"] < 1:
        raise ConfigError("solver.max_iters must be >= 1")
    if not 0.0 < s["backtrack"] < 1.0:
        raise ConfigError("solver.backtrack must be in (0, 1)")
    t = data["time"]
    if not t["t_final"] > 0:
        raise ConfigError("time.t_final must be > 0")
    if t["n_steps"] < 1:
        raise ConfigError("time.n_steps must be >= 1")
    dg = data["diagnostics"]
    if not 0.0 < dg["alpha"] < 1.0:
        raise ConfigError("diagnostics.alpha must be in (0, 1)")
    if not dg["holder_a"] > 1.0:
        raise ConfigError("diagnostics.holder_a must be > 1")
    if dg["n_test_fields"] < 1:
        raise ConfigError("diagnostics.n_test_fields must be >= 1")
    if data["output"]["snapshot_every"] < 0:
        raise ConfigError("output.snapshot_every must be >= 0")


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Validated configuration; builders construct the module objects."""

    data: dict

    def __getitem__(self, section: str) -> dict:
        return self.data[section]

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.data))  # deep copy of plain data

    # builders -------------------------------------------------------

    def grid(self) -> Grid:
        g = self.data["grid"]
        return Grid(lx=g["lx"], ly=g["ly"], nx=int(g["nx"]), ny=int(g["ny"]))

    @property
    def m(self) -> int:
        return int(self.data["model"]["m"])

    def energy_spec(self) -> energy.EnergySpec:
        e = self.data["energy"]
        if e["kind"] == "double_well":
            return energy.double_well(e["gamma"])
        return energy.quadratic(e["gamma"])

    def dissipation_spec(self) -> dsp.DissipationSpec:
        d = self.data["dissipation"]
        if d["kind"] == "euclidean":
            return dsp.euclidean(d["c"])
        return dsp.weighted_l1(d["weights"])

    def operator_spec(self) -> elliptic.CoeffField:
        o = self.data["operator"]
        m = self.m
        if o["kind"] == "laplacian":
            return elliptic.laplacian(m)
        if o["kind"] == "constant_anisotropic":
            return elliptic.constant_anisotropic(o["matrix"], m)
        base = o["matrix"] if o["matrix"] else None
        return elliptic.time_modulated(o["epsilon"], o["omega"], base=base, m=m)

    def loading_spec(self) -> loading.LoadingSpec:
        L = self.data["loading"]
        if L["time_kind"] == "constant":
            tp = loading.time_constant()
        elif L["time_kind"] == "ramp":
            tp = loading.time_ramp(L["rate"])
        else:
            tp = loading.time_sine(L["omega"])
        if L["space_kind"] == "sine":
            sp = loading.space_sine(L["amplitude"], int(L["kx"]), int(L["ky"]))
        elif L["space_kind"] == "bump":
            sp = loading.space_bump(L["amplitude"], L["x0"], L["y0"], L["sigma"])
        else:
            sp = loading.space_uniform(L["amplitude"])
        direction = tuple(L["direction"]) if L["direction"] else None
        return loading.analytic_loading(tp, sp, a=L["a"], p=L["p"], direction=direction)

    def partition(self) -> TimePartition:
        t = self.data["time"]
        return TimePartition.uniform(t["t_final"], int(t["n_steps"]))

    def initial_field(self, grid: Grid) -> Field:
        path = self.data["initial"]["snapshot"]
        if not path:
            return Field.zeros(grid, self.m)
        return read_snapshot(path)

    def solver_config(self) -> SolverConfig:
        s = self.data["solver"]
        return SolverConfig(
            tol=None if s["tol"] == 0.0 else s["tol"],
            max_iters=int(s["max_iters"]),
            backtrack=s["backtrack"],
            accel=s["accel"],
            allow_nonconvex=s["allow_nonconvex"],
        )

    def problem(self) -> Problem:
        grid = self.grid()
        return Problem(
            grid=grid,
            m=self.m,
            energy=self.energy_spec(),
            dissipation=self.dissipation_spec(),
            operator=self.operator_spec(),
            loading=self.loading_spec(),
            initial=self.initial_field(grid),
            time=self.partition(),
        )


def validate_config(data: dict) -> ValidationReport:
    """Run every assumption-bearing value through its checklist item.

    Works on the normalized primitive dict so that a bad value produces
    a report entry instead of a constructor exception.
    """
    rep = ValidationReport()

    def check(label, key, desc):
        rep.checks.append((label, key, desc))

    def fail(label, key, observed, required, value=None):
        rep.violations.append(Violation(label, key, observed, required, value))

    g = data["grid"]
    check("(A1)", "grid.lx", "rectangle side positive")
    check("(A1)", "grid.ly", "rectangle side positive")
    check("(A1)", "grid.nx", "at least 3 interior nodes per direction")
    check("(A1)", "grid.ny", "at least 3 interior nodes per direction")
    if not g["lx"] > 0:
        fail("(A1)", "grid.lx", f"{g['lx']}", "> 0", g["lx"])
    if not g["ly"] > 0:
        fail("(A1)", "grid.ly", f"{g['ly']}", "> 0", g["ly"])
    if g["nx"] < 3:
        fail("(A1)", "grid.nx", f"{g['nx']}", ">= 3", float(g["nx"]))
    if g["ny"] < 3:
        fail("(A1)", "grid.ny", f"{g['ny']}", ">= 3", float(g["ny"]))

    m = data["model"]["m"]

    d = data["dissipation"]
    check("(A2)", "dissipation.c", "activation threshold positive")
    if d["kind"] == "euclidean":
        if not d["c"] > 0:
            fail("(A2)", "dissipation.c", f"{d['c']}", "> 0", d["c"])
    else:
        check("(A2)", "dissipation.weights", "componentwise weights positive, length m")
        w = d["weights"]
        if len(w) != m:
            fail("(A2)", "dissipation.weights", f"length {len(w)}", f"length m = {m}")
        if not all(isinstance(x, float) and x > 0 for x in w):
            fail("(A2)", "dissipation.weights", f"{w}", "all entries > 0")

    e = data["energy"]
    check("(A3)", "energy.gamma", "well depth positive")
    check("(A3)", "energy.kind", "growth and monotonicity bounds hold (sampled)")
    gamma_ok = e["gamma"] > 0
    if not gamma_ok:
        fail("(A3)", "energy.gamma", f"{e['gamma']}", "> 0", e["gamma"])

    geometry_ok = rep.ok
    if geometry_ok:
        # Poincare constant needs a well-formed grid; gate on (A1).
        grid = Grid(lx=g["lx"], ly=g["ly"], nx=int(g["nx"]), ny=int(g["ny"]))
        cp = poincare_constant(grid)
        rep.cp = cp
        if gamma_ok:
            spec = (
                energy.double_well(e["gamma"])
                if e["kind"] == "double_well"
                else energy.quadratic(e["gamma"])
            )
            growth = energy.validate_growth(spec)
            if not growth.ok:
                fail(
                    "(A3)",
                    "energy.kind",
                    f"sampled growth slacks {growth}",
                    "all growth/monotonicity slacks >= 0",
                )
            mu_cp_sq = spec.mu * cp * cp
            rep.mu_cp_sq = mu_cp_sq
            check("(A3)", "energy.gamma", "convexity margin mu*C_P^2 < 1")
            if not mu_cp_sq < 1.0:
                fail(
                    "(A3)",
                    "energy.gamma",
                    f"mu*C_P^2 = {mu_cp_sq:.17g}",
                    "mu*C_P^2 < 1",
                    mu_cp_sq,
                )

    o = data["operator"]
    check("(A4)", "operator.matrix", "major symmetry (exact)")
    check("(A4)", "operator.matrix", "ellipticity: smallest eigenvalue kappa > 0")
    check("(A4)", "operator.epsilon", "time modulation keeps kappa > 0 (|epsilon| < 1)")
    if o["kind"] in ("constant_anisotropic", "time_modulated") and o["matrix"]:
        M = np.asarray(o["matrix"], dtype=float)
        if M.shape != (2 * m, 2 * m):
            fail("(A4)", "operator.matrix", f"shape {M.shape}", f"(2m, 2m) = {(2*m, 2*m)}")
        elif not np.array_equal(M, M.T):
            fail("(A4)", "operator.matrix", "non-symmetric matrix", "M == M.T exactly")
        else:
            kap = float(np.linalg.eigvalsh(M).min())
            if not kap > 0:
                fail("(A4)", "operator.matrix", f"kappa = {kap:.6g}", "kappa > 0", kap)
    if o["kind"] == "constant_anisotropic" and not o["matrix"]:
        fail("(A4)", "operator.matrix", "empty", "a (2m, 2m) matrix")
    if o["kind"] == "time_modulated" and not abs(o["epsilon"]) < 1.0:
        fail("(A4)", "operator.epsilon", f"{o['epsilon']}", "|epsilon| < 1", o["epsilon"])

    L = data["loading"]
    check("(A5)", "loading.a", "time-regularity index a > 1")
    check("(A5)", "loading.p", "spatial integrability index p >= 2")
    if not L["a"] > 1.0:
        fail("(A5)", "loading.a", f"{L['a']}", "> 1", L["a"])
    if not L["p"] >= 2.0:
        fail("(A5)", "loading.p", f"{L['p']}", ">= 2", L["p"])
    if L["direction"] and len(L["direction"]) != m:
        fail("(A5)", "loading.direction", f"length {len(L['direction'])}", f"length m = {m}")

    check("(A6)", "initial.snapshot", "initial field readable, finite, matching grid")
    snap = data["initial"]["snapshot"]
    if snap:
        try:
            u0 = read_snapshot(snap)
        except Exception as exc:  # surfaced as a violation, not a crash
            fail("(A6)", "initial.snapshot", f"unreadable ({exc})", "a valid snapshot file")
        else:
            if geometry_ok:
                gr = Grid(lx=g["lx"], ly=g["ly"], nx=int(g["nx"]), ny=int(g["ny"]))
                if (u0.grid.nx, u0.grid.ny) != (gr.nx, gr.ny) or u0.values.shape[2] != m:
                    fail(
                        "(A6)",
                        "initial.snapshot",
                        f"grid {u0.grid.nx}x{u0.grid.ny}, m={u0.values.shape[2]}",
                        f"grid {gr.nx}x{gr.ny}, m={m}",
                    )

    return rep


def load_config_text(text: str):
    """Parse and validate; returns a RunConfig, or the report on failure."""
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from exc
    data = _merge_defaults(raw)
    _structural_check(data)
    report = validate_config(data)
    if not report.ok:
        return report
    return RunConfig(data)


def load_config(path):
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    return load_config_text(text)


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, list):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    raise ConfigError(f"cannot format value of type {type(v).__name__}")


def echo_config(cfg: RunConfig) -> str:
    """Emit the fully-defaulted config back as the same TOML subset.

    Loading the echoed text reproduces the config exactly (round-trip
    idempotence); every default is materialized so the echo is the
    complete record of the run.
    """
    lines = []
    for section in DEFAULTS:
        lines.append(f"[{section}]")
        for key in DEFAULTS[section]:
            lines.append(f"{key} = {_fmt_value(cfg.data[section][key])}")
        lines.append("")
    return "\n".join(lines)
