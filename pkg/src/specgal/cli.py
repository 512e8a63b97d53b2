"""Configuration-driven scenario runner.

Scenarios are TOML files naming one of seven kinds: ``parabolic``,
``porous-medium``, ``hyperbolic``, ``ensemble``, ``anomalous``,
``kato-rellich``, and ``damped-wave``.  Every referenced parameter is
validated against the target module's preconditions before any compute
starts.  Runs emit a time-series table, a report table, and a manifest
with content checksums; identical configurations reproduce identical
files byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
import time as _time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .anomalous import (
    DampedWaveProblem,
    FractionalOperatorSpec,
    damped_wave_propagate,
    evolve_fractional,
    kato_rellich_report,
)
from .basis import (
    DIRICHLET_CUBE,
    PERIODIC_TORUS,
    BasisSpec,
    PhysicalField,
    SpectralField,
    build_basis,
    inner_product,
    project,
)
from .ensemble import (
    KernelSpec,
    ensemble_moment_report,
    random_probes,
    run_ensemble,
    sample_initial_condition,
    sample_lognormal_potential,
    trace_of_kernel,
)
from .errors import NotTraceClassError, SpecgalError
from .hyperbolic import (
    HyperbolicProblem,
    WaveState,
    integrate_wave,
    velocity_consistency,
    wave_energy_audit,
)
from .integrate import StepControl
from .nonlinearity import (
    PorousMediumParams,
    make_exponential_profile,
    make_linear_profile,
    make_regularized_power_profile,
)
from .parabolic import ParabolicProblem, energy_audit, integrate_parabolic

SCENARIO_KINDS = (
    "parabolic",
    "porous-medium",
    "hyperbolic",
    "ensemble",
    "anomalous",
    "kato-rellich",
    "damped-wave",
)


@dataclass(frozen=True)
class RunManifest:
    """Checksums and provenance of one scenario run."""

    scenario: str
    config_hash: str
    tool_version: str
    seed_override: int | None
    tolerance_scale: float
    wall_time_seconds: float
    output_checksums: dict

    def to_text(self) -> str:
        # wall time is intentionally left out: the file must be
        # reproducible byte for byte across identical runs
        lines = [
            f"scenario = {self.scenario}",
            f"tool_version = {self.tool_version}",
            f"config_sha256 = {self.config_hash}",
            f"seed_override = {self.seed_override if self.seed_override is not None else 'none'}",
            f"tolerance_scale = {_fmt(self.tolerance_scale)}",
        ]
        for name in sorted(self.output_checksums):
            lines.append(f"output {name} sha256 = {self.output_checksums[name]}")
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


# ---------------------------------------------------------------------------
# config loading and validation


def _bundled_files():
    root = resources.files("specgal.scenarios")
    return sorted(
        (entry for entry in root.iterdir() if entry.name.endswith(".toml")),
        key=lambda entry: entry.name,
    )


def resolve_config(identifier: str) -> tuple[str, bytes]:
    """Resolve a path or bundled scenario name to (name, raw bytes)."""
    path = Path(identifier)
    if path.is_file():
        return path.stem, path.read_bytes()
    wanted = identifier if identifier.endswith(".toml") else identifier + ".toml"
    for entry in _bundled_files():
        if entry.name == wanted:
            return entry.name[: -len(".toml")], entry.read_bytes()
    raise FileNotFoundError(
        f"no config file or bundled scenario named {identifier!r}"
    )


def _load(raw_bytes: bytes) -> dict:
    return tomllib.loads(raw_bytes.decode("utf-8"))


class _Plan:
    """Validated, fully built inputs for one scenario run."""

    def __init__(self):
        self.kind = None
        self.basis = None
        self.profile = None
        self.kernel = None
        self.extras = {}


def _get(section: dict, key: str, issues: list, context: str, default=None,
         required: bool = False):
    if key not in section:
        if required:
            issues.append(f"{context}.{key}: missing required key")
        return default
    return section[key]


def _build_basis(config: dict, issues: list):
    domain = config.get("domain")
    if domain is None:
        issues.append("domain: missing section")
        return None
    geometry = _get(domain, "geometry", issues, "domain", required=True)
    side = _get(domain, "side_length", issues, "domain", required=True)
    dim = _get(domain, "dimension", issues, "domain", required=True)
    modes = _get(domain, "modes_per_axis", issues, "domain", required=True)
    if None in (geometry, side, dim, modes):
        return None
    try:
        return build_basis(BasisSpec(geometry, float(side), int(dim), int(modes)))
    except SpecgalError as exc:
        issues.append(f"domain: {exc}")
        return None


def _build_profile(config: dict, kind: str, issues: list):
    section = config.get("nonlinearity")
    if kind == "porous-medium":
        if section is None:
            issues.append("nonlinearity: missing section")
            return None
        try:
            params = PorousMediumParams(
                exponent=float(_get(section, "exponent", issues, "nonlinearity", 1.0)),
                pressure_constant=float(
                    _get(section, "pressure_constant", issues, "nonlinearity", 1.0)
                ),
                permeability=float(
                    _get(section, "permeability", issues, "nonlinearity", 1.0)
                ),
                epsilon=float(_get(section, "epsilon", issues, "nonlinearity", 0.1)),
                saturation=float(
                    _get(section, "saturation", issues, "nonlinearity", 1.0)
                ),
            )
            return make_regularized_power_profile(params)
        except (SpecgalError, TypeError, ValueError) as exc:
            issues.append(f"nonlinearity: {exc}")
            return None
    if section is None:
        return None
    shape = _get(section, "kind", issues, "nonlinearity", required=True)
    try:
        if shape == "linear":
            return make_linear_profile(float(section.get("slope", 1.0)))
        if shape == "exponential":
            clamp = section.get("clamp", [-20.0, 20.0])
            return make_exponential_profile(
                float(section.get("k0", 1.0)), (float(clamp[0]), float(clamp[1]))
            )
    except (SpecgalError, TypeError, ValueError) as exc:
        issues.append(f"nonlinearity: {exc}")
        return None
    issues.append(f"nonlinearity.kind: unknown kind {shape!r}")
    return None


def _build_kernel(config: dict, basis, issues: list):
    section = config.get("kernel")
    if section is None or basis is None:
        return None
    shape = _get(section, "kind", issues, "kernel", required=True)
    try:
        if shape == "diagonal":
            values = section.get("values")
            if values is None:
                issues.append("kernel.values: missing diagonal entries")
                return None
            kernel = KernelSpec(basis, diagonal=np.asarray(values, dtype=float))
        elif shape == "eigenvalue-power":
            # mode variance scale / (1 + eigenvalue)^decay; the shift keeps
            # zero modes of periodic bases finite
            scale = float(section.get("scale", 1.0))
            decay = float(section.get("decay", 2.0))
            diag = scale * (1.0 + basis.eigenvalues) ** (-decay)
            kernel = KernelSpec(basis, diagonal=diag)
        else:
            issues.append(f"kernel.kind: unknown kind {shape!r}")
            return None
        ceiling = float(section.get("trace_ceiling", 1e8))
        trace_of_kernel(kernel, ceiling)
        return kernel
    except NotTraceClassError as exc:
        issues.append(f"kernel: trace admissibility gate failed: {exc}")
        return None
    except (SpecgalError, TypeError, ValueError) as exc:
        issues.append(f"kernel: {exc}")
        return None


def _bump_values(basis, grid):
    """Smooth unit-peak bump respecting the boundary conditions."""
    length = basis.spec.side_length
    values = np.ones(grid.shape)
    mesh = np.meshgrid(*grid.axes, indexing="ij")
    for axis_vals in mesh:
        if basis.spec.domain_kind == DIRICHLET_CUBE:
            values = values * (4.0 / length ** 2) * axis_vals * (length - axis_vals)
        else:
            values = values * 0.5 * (
                1.0 - np.cos(2.0 * np.pi * axis_vals / length)
            )
    return values


def _build_initial(section, basis, kernel, issues, context, seed_override=None):
    if section is None:
        issues.append(f"{context}: missing section")
        return None
    if basis is None:
        return None
    shape = _get(section, "kind", issues, context, required=True)
    try:
        if shape == "zero":
            return SpectralField(basis, np.zeros(basis.n_modes))
        if shape == "mode":
            labels = section.get("labels")
            if labels is None:
                issues.append(f"{context}.labels: missing mode labels")
                return None
            amplitude = float(section.get("amplitude", 1.0))
            coeffs = np.zeros(basis.n_modes)
            coeffs[basis.mode_position(labels)] = amplitude
            return SpectralField(basis, coeffs)
        if shape == "bump":
            amplitude = float(section.get("amplitude", 1.0))
            grid = basis.default_grid()
            field = PhysicalField(grid, amplitude * _bump_values(basis, grid))
            return project(field, basis)
        if shape == "kernel-sample":
            if kernel is None:
                issues.append(
                    f"{context}: kernel-sample initial data needs a kernel section"
                )
                return None
            seed = int(section.get("seed", 0))
            if seed_override is not None:
                seed = seed_override
            return sample_initial_condition(kernel, seed)
    except (SpecgalError, TypeError, ValueError) as exc:
        issues.append(f"{context}: {exc}")
        return None
    issues.append(f"{context}.kind: unknown kind {shape!r}")
    return None


def _build_operator(config: dict, basis, issues: list):
    """Spectral symbol of the elliptic part plus the nonlinear cutoff."""
    section = config.get("operator", {})
    shape = section.get("kind", "laplacian")
    factor = float(section.get("factor", 1.0))
    cutoff = float(section.get("cutoff", math.inf))
    if shape == "laplacian":
        multiplier = (lambda lam: factor * lam) if factor != 1.0 else None
    elif shape == "none":
        multiplier = lambda lam: 0.0
    else:
        issues.append(f"operator.kind: unknown kind {shape!r}")
        return None, cutoff
    if factor < 0:
        issues.append("operator.factor: must be nonnegative")
    return multiplier, cutoff


def _build_control(config: dict, tolerance_scale: float) -> StepControl:
    section = config.get("integrator", {})
    control = StepControl(
        rtol=float(section.get("rtol", 1e-8)),
        atol=float(section.get("atol", 1e-10)),
        method=str(section.get("method", "RK45")),
    )
    return control.scaled(tolerance_scale) if tolerance_scale != 1.0 else control


def _time_grid(config: dict, issues: list):
    section = config.get("time")
    if section is None:
        issues.append("time: missing section")
        return None, None
    horizon = _get(section, "horizon", issues, "time", required=True)
    points = int(section.get("record_points", 65))
    if horizon is None:
        return None, None
    horizon = float(horizon)
    if horizon <= 0:
        issues.append("time.horizon: must be positive")
        return None, None
    if points < 2:
        issues.append("time.record_points: must be at least 2")
        return None, None
    return horizon, np.linspace(0.0, horizon, points)


def validate_config(raw: dict, seed_override=None) -> tuple:
    """Check every precondition without computing; returns (issues, plan)."""
    issues: list = []
    plan = _Plan()
    kind = raw.get("kind")
    if kind not in SCENARIO_KINDS:
        issues.append(
            f"kind: expected one of {', '.join(SCENARIO_KINDS)}, got {kind!r}"
        )
        return issues, plan
    plan.kind = kind

    if kind == "kato-rellich":
        section = raw.get("kato_rellich")
        if section is None:
            issues.append("kato_rellich: missing section")
            return issues, plan
        alpha = float(_get(section, "alpha", issues, "kato_rellich", 1.0))
        dim = int(_get(section, "dimension", issues, "kato_rellich", 1))
        if dim not in (1, 2, 3):
            issues.append("kato_rellich.dimension: must be 1, 2, or 3")
        elif alpha <= dim / 4.0:
            issues.append(
                f"kato_rellich.alpha: admissibility requires alpha > dim/4 "
                f"= {dim / 4.0}; got {alpha}"
            )
        norm = float(section.get("potential_norm", 1.0))
        if norm < 0:
            issues.append("kato_rellich.potential_norm: must be nonnegative")
        scale = section.get("scale")
        if scale is not None and float(scale) <= 0:
            issues.append("kato_rellich.scale: must be positive")
        plan.extras["kato"] = dict(
            alpha=alpha, dim=dim, potential_norm=norm,
            scale=float(scale) if scale is not None else None,
        )
        return issues, plan

    basis = _build_basis(raw, issues)
    plan.basis = basis
    plan.kernel = _build_kernel(raw, basis, issues)

    if kind in ("parabolic", "porous-medium", "hyperbolic", "ensemble"):
        plan.profile = _build_profile(raw, kind, issues)
        if plan.profile is None and "nonlinearity" not in raw:
            issues.append("nonlinearity: missing section")
        multiplier, cutoff = _build_operator(raw, basis, issues)
        if kind == "porous-medium" and "operator" not in raw:
            multiplier, cutoff = (lambda lam: 0.0), math.inf
        horizon, record = _time_grid(raw, issues)
        plan.extras.update(
            multiplier=multiplier, cutoff=cutoff, horizon=horizon, record=record
        )
        if kind == "hyperbolic":
            wave = raw.get("wave", {})
            damping = float(wave.get("damping", 0.0))
            if damping < 0:
                issues.append("wave.damping: must be nonnegative")
            plan.extras["damping"] = damping
            initials = raw.get("initial", {})
            plan.extras["position"] = _build_initial(
                initials.get("position"), basis, plan.kernel, issues,
                "initial.position", seed_override,
            )
            plan.extras["velocity"] = _build_initial(
                initials.get("velocity"), basis, plan.kernel, issues,
                "initial.velocity", seed_override,
            )
        else:
            plan.extras["initial"] = _build_initial(
                raw.get("initial"), basis, plan.kernel, issues, "initial",
                seed_override,
            )
        if kind == "ensemble":
            section = raw.get("ensemble")
            if section is None:
                issues.append("ensemble: missing section")
            else:
                count = int(_get(section, "sample_count", issues, "ensemble", 0,
                                 required=True) or 0)
                if count < 1:
                    issues.append("ensemble.sample_count: must be at least 1")
                base_seed = int(section.get("base_seed", 0))
                if seed_override is not None:
                    base_seed = seed_override
                plan.extras["ensemble"] = dict(count=count, base_seed=base_seed)
            if plan.kernel is None and "kernel" not in raw:
                issues.append("kernel: ensemble scenarios need a kernel section")
            probes = raw.get("probes", {})
            plan.extras["probes"] = dict(
                count=int(probes.get("count", 0)),
                seed=int(probes.get("seed", 1)),
                amplitude=float(probes.get("amplitude", 1.0)),
            )
            entries = raw.get("two_point", [])
            for i, entry in enumerate(entries):
                missing = [key for key in ("x", "y", "t") if key not in entry]
                if missing:
                    issues.append(
                        f"two_point[{i}]: missing {', '.join(missing)}"
                    )
                elif plan.extras.get("record") is not None and not np.any(
                    np.isclose(plan.extras["record"], float(entry["t"]),
                               rtol=0.0, atol=1e-12)
                ):
                    issues.append(
                        f"two_point[{i}].t: {entry['t']} is not on the "
                        "recording grid"
                    )
            plan.extras["two_point"] = entries
        plan.extras["forcing"] = None
        if "forcing" in raw:
            forcing = _build_initial(
                raw.get("forcing"), basis, plan.kernel, issues, "forcing",
                seed_override,
            )
            plan.extras["forcing"] = forcing
        # decay-inequality gate: a_p must be positive when p is requested
        audit = raw.get("audit", {})
        p = audit.get("p")
        plan.extras["p"] = int(p) if p is not None else None
        if p is not None and basis is not None:
            symbol = (
                basis.eigenvalues
                if multiplier is None
                else np.array([multiplier(lam) for lam in basis.eigenvalues])
            )
            gamma = float(symbol.min())
            a_p = gamma - 1.0 / (2.0 * int(p))
            if a_p <= 0:
                issues.append(
                    f"audit.p: a_p = gamma - 1/(2p) = {a_p:.6g} <= 0 for "
                    f"gamma = {gamma:.6g}; the decay inequality needs a_p > 0"
                )
        return issues, plan

    if kind == "anomalous":
        if basis is not None and basis.spec.domain_kind != PERIODIC_TORUS:
            issues.append("domain.geometry: anomalous runs need a periodic torus")
        section = raw.get("fractional")
        if section is None:
            issues.append("fractional: missing section")
            return issues, plan
        alpha = float(_get(section, "alpha", issues, "fractional", 1.0))
        diffusivity = float(section.get("diffusivity", 1.0))
        coupling = float(section.get("coupling", 0.0))
        if basis is not None and alpha <= basis.spec.dimension / 4.0:
            issues.append(
                "fractional.alpha: admissibility requires alpha > dim/4 "
                f"= {basis.spec.dimension / 4.0}; got {alpha}"
            )
        if diffusivity <= 0:
            issues.append("fractional.diffusivity: must be positive")
        plan.profile = _build_profile(raw, kind, issues)
        if coupling != 0.0 and plan.profile is None:
            issues.append(
                "fractional.coupling: nonzero coupling needs a nonlinearity section"
            )
        potential = None
        pot_section = raw.get("potential", {})
        pot_kind = pot_section.get("kind", "none")
        if basis is not None:
            try:
                if pot_kind == "constant":
                    grid = basis.default_grid()
                    potential = PhysicalField(
                        grid,
                        np.full(grid.shape, float(pot_section.get("value", 0.0))),
                    )
                elif pot_kind == "lognormal":
                    if plan.kernel is None:
                        issues.append(
                            "potential: lognormal potential needs a kernel section"
                        )
                    else:
                        seed = int(pot_section.get("seed", 0))
                        if seed_override is not None:
                            seed = seed_override
                        potential = sample_lognormal_potential(
                            float(pot_section.get("v0", 1.0)),
                            float(pot_section.get("coupling", 0.0)),
                            plan.kernel,
                            basis,
                            seed,
                        )
                elif pot_kind != "none":
                    issues.append(f"potential.kind: unknown kind {pot_kind!r}")
            except (SpecgalError, TypeError, ValueError) as exc:
                issues.append(f"potential: {exc}")
        time_section = raw.get("time", {})
        horizon = float(time_section.get("horizon", 0.0))
        steps = int(time_section.get("steps", 0))
        record_every = int(time_section.get("record_every", max(1, steps // 8 or 1)))
        if horizon <= 0:
            issues.append("time.horizon: must be positive")
        if steps < 1:
            issues.append("time.steps: must be at least 1")
        if record_every < 1 or (steps >= 1 and steps % record_every != 0):
            issues.append("time.record_every: must divide time.steps")
        plan.extras.update(
            alpha=alpha, diffusivity=diffusivity, coupling=coupling,
            potential=potential, horizon=horizon, steps=steps,
            record_every=record_every,
            initial=_build_initial(raw.get("initial"), basis, plan.kernel,
                                   issues, "initial", seed_override),
        )
        return issues, plan

    if kind == "damped-wave":
        section = raw.get("fractional", {})
        alpha = float(section.get("alpha", 1.0))
        if basis is not None and alpha <= basis.spec.dimension / 4.0:
            issues.append(
                "fractional.alpha: admissibility requires alpha > dim/4 "
                f"= {basis.spec.dimension / 4.0}; got {alpha}"
            )
        damping_section = raw.get("damping", {})
        damping_kind = damping_section.get("kind", "constant")
        damping = None
        if basis is not None:
            try:
                if damping_kind == "constant":
                    value = float(damping_section.get("value", 0.0))
                    if value < 0:
                        issues.append("damping.value: must be nonnegative")
                    damping = value
                elif damping_kind == "lognormal-sq":
                    if plan.kernel is None:
                        issues.append(
                            "damping: lognormal-sq damping needs a kernel section"
                        )
                    else:
                        seed = int(damping_section.get("seed", 0))
                        if seed_override is not None:
                            seed = seed_override
                        sq = sample_lognormal_potential(
                            float(damping_section.get("v0", 1.0)),
                            float(damping_section.get("coupling", 0.0)),
                            plan.kernel,
                            basis,
                            seed,
                        )
                        damping = PhysicalField(sq.grid, np.sqrt(sq.values))
                else:
                    issues.append(f"damping.kind: unknown kind {damping_kind!r}")
            except (SpecgalError, TypeError, ValueError) as exc:
                issues.append(f"damping: {exc}")
        prop = raw.get("propagation", {})
        times = prop.get("times")
        if not times:
            issues.append("propagation.times: missing evaluation times")
            times = []
        elif any(float(t) < 0 for t in times):
            issues.append("propagation.times: must be nonnegative")
        truncation = prop.get("truncation")
        if truncation is not None and basis is not None:
            if not 1 <= int(truncation) <= basis.n_modes:
                issues.append(
                    "propagation.truncation: must lie between 1 and the basis size"
                )
        initials = raw.get("initial", {})
        plan.extras.update(
            alpha=alpha,
            damping=damping,
            times=[float(t) for t in times],
            truncation=int(truncation) if truncation is not None else None,
            position=_build_initial(initials.get("position"), basis, plan.kernel,
                                    issues, "initial.position", seed_override),
            velocity=_build_initial(initials.get("velocity"), basis, plan.kernel,
                                    issues, "initial.velocity", seed_override),
        )
        return issues, plan

    return issues, plan


# ---------------------------------------------------------------------------
# execution


def _series_rows(columns):
    names = [name for name, _ in columns]
    arrays = [np.asarray(vals) for _, vals in columns]
    rows = [",".join(names)]
    for k in range(arrays[0].size):
        rows.append(",".join(_fmt(arr[k]) for arr in arrays))
    return "\n".join(rows) + "\n"


def _report_rows(rows):
    out = ["name,value"]
    for name, value in rows:
        out.append(f"{name},{_fmt(value)}")
    return "\n".join(out) + "\n"


def _with_comments(comment_lines, body):
    return "".join(f"# {line}\n" for line in comment_lines) + body


def _run_parabolic(plan, raw, control, workers):
    problem = ParabolicProblem(
        basis=plan.basis,
        profile=plan.profile,
        horizon=plan.extras["horizon"],
        a_multiplier=plan.extras["multiplier"],
        forcing=plan.extras.get("forcing"),
        cutoff=plan.extras["cutoff"],
    )
    traj = integrate_parabolic(
        problem, plan.extras["initial"], control, plan.extras["record"]
    )
    report = energy_audit(traj, problem, p=plan.extras.get("p"), control=control)
    series = [
        ("t", traj.times),
        ("l2_sq", report.l2_sq),
        ("quadratic_dissipation", report.quadratic_dissipation),
        ("nonlinear_dissipation", report.nonlinear_dissipation),
        ("forcing_work", report.forcing_work),
        ("quadratic_dissipation_integral",
         traj.diagnostics["quadratic_dissipation_integral"]),
        ("nonlinear_dissipation_integral",
         traj.diagnostics["nonlinear_dissipation_integral"]),
        ("forcing_work_integral", traj.diagnostics["forcing_work_integral"]),
    ]
    rows = [
        ("coercivity", report.coercivity),
        ("sup_l2_sq", report.sup_l2_sq),
        ("max_abs_energy_balance_residual",
         float(np.max(np.abs(report.identity_residuals)))
         if report.identity_residuals.size else 0.0),
        ("energy_balance_violations", int(report.identity_violations.sum())),
    ]
    if report.p is not None:
        rows += [
            ("p", report.p),
            ("a_p", report.a_p),
            ("gronwall_m", report.gronwall_m),
            ("gronwall_satisfied", report.gronwall_satisfied),
            ("max_decay_inequality_residual",
             float(np.max(report.inequality_residuals))),
            ("decay_inequality_violations",
             int(report.inequality_violations.sum())),
        ]
    comments = [
        "per-time squared L2 norm, dissipation terms, forcing work, and",
        "the running integrals entering the energy balance",
    ]
    return series, rows, comments


def _run_hyperbolic(plan, raw, control, workers):
    problem = HyperbolicProblem(
        basis=plan.basis,
        profile=plan.profile,
        damping=plan.extras["damping"],
        horizon=plan.extras["horizon"],
        a_multiplier=plan.extras["multiplier"],
        forcing=plan.extras.get("forcing"),
        cutoff=plan.extras["cutoff"],
    )
    initial = WaveState(plan.extras["position"], plan.extras["velocity"])
    traj = integrate_wave(problem, initial, control, plan.extras["record"])
    report = wave_energy_audit(traj, problem, control=control)
    series = [
        ("t", traj.times),
        ("energy", report.energy),
        ("velocity_l2_sq", report.velocity_l2_sq),
        ("position_l2_sq", report.position_l2_sq),
        ("nonlinear_dissipation", report.nonlinear_dissipation),
        ("kinetic_integral", traj.diagnostics["kinetic_integral"]),
    ]
    rows = [
        ("sup_velocity_sq", report.sup_velocity_sq),
        ("sup_position_sq", report.sup_position_sq),
        ("velocity_sq_integral", report.velocity_sq_integral),
        ("bound_applicable", report.bound_applicable),
        ("max_abs_energy_balance_residual",
         float(np.max(np.abs(report.identity_residuals)))),
        ("energy_balance_violations", int(report.identity_violations.sum())),
        ("velocity_consistency_residual", velocity_consistency(traj)),
    ]
    if report.bound_m is not None:
        rows.append(("bound_m", report.bound_m))
        rows.append(("integral_bound_satisfied", report.integral_bound_satisfied))
    if report.slope_violations is not None:
        rows.append(("energy_slope_violations", int(report.slope_violations.sum())))
    comments = [
        "per-time wave energy (squared velocity norm plus elliptic quadratic",
        "form), its pieces, and the running kinetic integral",
    ]
    return series, rows, comments


def _run_ensemble(plan, raw, control, workers):
    problem = ParabolicProblem(
        basis=plan.basis,
        profile=plan.profile,
        horizon=plan.extras["horizon"],
        a_multiplier=plan.extras["multiplier"],
        cutoff=plan.extras["cutoff"],
    )
    settings = plan.extras["ensemble"]
    ens = run_ensemble(
        problem,
        plan.kernel,
        settings["count"],
        settings["base_seed"],
        control=control,
        record_times=plan.extras["record"],
        workers=workers,
    )
    probe_cfg = plan.extras["probes"]
    probes = random_probes(
        plan.basis, ens.times, probe_cfg["count"], probe_cfg["seed"],
        probe_cfg["amplitude"],
    )
    points = [
        (np.asarray(entry["x"], dtype=float), np.asarray(entry["y"], dtype=float),
         float(entry["t"]))
        for entry in plan.extras["two_point"]
    ]
    moments = ensemble_moment_report(ens, probes, points)
    mean_l2_sq = np.einsum("nkm,nkm->k", ens.states, ens.states) / ens.n_members
    mean_field_l2 = np.linalg.norm(moments.mean_coefficients, axis=1)
    series = [
        ("t", ens.times),
        ("mean_l2_sq", mean_l2_sq),
        ("mean_field_l2", mean_field_l2),
    ]
    rows = [
        ("n_members", ens.n_members),
        ("n_failures", len(ens.failures)),
        ("kernel_trace", ens.kernel.trace),
    ]
    for i, (estimate, stderr) in enumerate(moments.probe_estimates):
        rows += [
            (f"probe_{i}_re", estimate.real),
            (f"probe_{i}_im", estimate.imag),
            (f"probe_{i}_stderr", stderr),
        ]
    for i, (x, y, t, cov, stderr) in enumerate(moments.two_point):
        rows += [
            (f"two_point_{i}_cov", cov),
            (f"two_point_{i}_stderr", stderr),
            (f"two_point_{i}_kernel_value", ens.kernel.point_covariance(x, y)),
        ]
    comments = [
        "ensemble mean of the squared field norm and the norm of the mean",
        "field per recorded time",
    ]
    return series, rows, comments


def _run_anomalous(plan, raw, control, workers):
    spec = FractionalOperatorSpec(
        alpha=plan.extras["alpha"],
        diffusivity=plan.extras["diffusivity"],
        potential=plan.extras["potential"],
        coupling=plan.extras["coupling"],
    )
    steps = plan.extras["steps"]
    every = plan.extras["record_every"]
    horizon = plan.extras["horizon"]
    h_segment = horizon * every / steps
    state = plan.extras["initial"]
    times = [0.0]
    norms = [state.l2_norm ** 2]
    for segment in range(steps // every):
        state = evolve_fractional(state, spec, plan.profile, h_segment, every)
        times.append(h_segment * (segment + 1))
        norms.append(state.l2_norm ** 2)
    series = [("t", np.array(times)), ("l2_sq", np.array(norms))]
    rows = [
        ("alpha", spec.alpha),
        ("diffusivity", spec.diffusivity),
        ("coupling", spec.coupling),
        ("steps", steps),
        ("final_l2_sq", norms[-1]),
    ]
    if plan.extras["potential"] is not None:
        rows += [
            ("potential_min", float(plan.extras["potential"].values.min())),
            ("potential_max", float(plan.extras["potential"].values.max())),
        ]
    comments = ["squared field norm along the split-step fractional evolution"]
    return series, rows, comments


def _run_kato(plan, raw, control, workers):
    cfg = plan.extras["kato"]
    report = kato_rellich_report(
        cfg["potential_norm"], cfg["alpha"], cfg["dim"], cfg["scale"]
    )
    rows = [
        ("alpha", report.alpha),
        ("dimension", report.dim),
        ("constant", report.constant),
        ("potential_norm", report.potential_norm),
        ("scale", report.scale),
        ("bound_a", report.bound_a),
        ("bound_b", report.bound_b),
        ("min_scale", report.min_scale),
        ("admissible", report.admissible),
    ]
    comments = ["relative-bound coefficients of the potential against the operator"]
    return None, rows, comments


def _run_damped_wave(plan, raw, control, workers):
    problem = DampedWaveProblem(
        basis=plan.basis,
        alpha=plan.extras["alpha"],
        damping=plan.extras["damping"],
        initial_position=plan.extras["position"],
        initial_velocity=plan.extras["velocity"],
        truncation=plan.extras["truncation"],
    )
    times = plan.extras["times"]
    field_norms = []
    companion_norms = []
    for t in times:
        field, companion = damped_wave_propagate(problem, t)
        field_norms.append(math.sqrt(inner_product(field, field)))
        companion_norms.append(math.sqrt(inner_product(companion, companion)))
    series = [
        ("t", np.array(times)),
        ("field_l2", np.array(field_norms)),
        ("companion_l2", np.array(companion_norms)),
    ]
    damping = plan.extras["damping"]
    if isinstance(damping, PhysicalField):
        damping_min = float(damping.values.min())
        damping_max = float(damping.values.max())
    else:
        damping_min = damping_max = float(damping)
    rows = [
        ("alpha", plan.extras["alpha"]),
        ("damping_min", damping_min),
        ("damping_max", damping_max),
        ("truncation",
         plan.extras["truncation"] if plan.extras["truncation"] is not None
         else plan.basis.n_modes),
    ]
    comments = [
        "L2 norms of the damped field and its undamped companion at the",
        "requested evaluation times",
    ]
    return series, rows, comments


_RUNNERS = {
    "parabolic": _run_parabolic,
    "porous-medium": _run_parabolic,
    "hyperbolic": _run_hyperbolic,
    "ensemble": _run_ensemble,
    "anomalous": _run_anomalous,
    "kato-rellich": _run_kato,
    "damped-wave": _run_damped_wave,
}


def run_scenario(
    identifier: str,
    output_dir: str = ".",
    seed_override: int | None = None,
    workers: int = 1,
    tolerance_scale: float = 1.0,
) -> RunManifest:
    """Validate, execute, and persist one scenario; returns the manifest."""
    name, raw_bytes = resolve_config(identifier)
    raw = _load(raw_bytes)
    issues, plan = validate_config(raw, seed_override)
    if issues:
        raise SpecgalError(
            "configuration is invalid:\n" + "\n".join(f"  - {i}" for i in issues)
        )
    control = _build_control(raw, tolerance_scale)
    started = _time.perf_counter()
    series, rows, comments = _RUNNERS[plan.kind](plan, raw, control, workers)
    elapsed = _time.perf_counter() - started

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    checksums = {}

    def write(filename, text):
        payload = text.encode("utf-8")
        (out / filename).write_bytes(payload)
        checksums[filename] = hashlib.sha256(payload).hexdigest()

    if series is not None:
        write(f"{name}-series.csv", _with_comments(comments, _series_rows(series)))
    write(f"{name}-report.csv", _with_comments(
        [f"scenario {name} ({plan.kind})"], _report_rows(rows)))
    manifest = RunManifest(
        scenario=name,
        config_hash=hashlib.sha256(raw_bytes).hexdigest(),
        tool_version=__version__,
        seed_override=seed_override,
        tolerance_scale=tolerance_scale,
        wall_time_seconds=elapsed,
        output_checksums=checksums,
    )
    (out / "manifest.txt").write_text(manifest.to_text())
    return manifest


def list_scenarios() -> list:
    """Names and one-line descriptions of the bundled scenario configs."""
    entries = []
    for entry in _bundled_files():
        raw = _load(entry.read_bytes())
        entries.append(
            (entry.name[: -len(".toml")], raw.get("description", ""))
        )
    return entries


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="specgal",
        description="Run, validate, and list spectral-Galerkin scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="validate and execute a scenario")
    run_parser.add_argument("config", help="config path or bundled scenario name")
    run_parser.add_argument("--output-dir", default=".")
    run_parser.add_argument("--seed-override", type=int, default=None)
    run_parser.add_argument("--workers", type=int, default=1)
    run_parser.add_argument("--tolerance-scale", type=float, default=1.0)

    validate_parser = sub.add_parser("validate", help="check a scenario config")
    validate_parser.add_argument("config", help="config path or bundled name")

    sub.add_parser("list", help="list bundled scenarios")

    args = parser.parse_args(argv)

    if args.command == "list":
        for name, description in list_scenarios():
            print(f"{name}  -  {description}")
        return 0

    try:
        name, raw_bytes = resolve_config(args.config)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        raw = _load(raw_bytes)
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        print(f"error: cannot parse {args.config}: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        issues, _ = validate_config(raw)
        if issues:
            print(f"{name}: {len(issues)} issue(s)", file=sys.stderr)
            for issue in issues:
                print(f"  - {issue}", file=sys.stderr)
            return 2
        print(f"{name}: ok")
        return 0

    issues, _ = validate_config(raw, args.seed_override)
    if issues:
        print(f"{name}: {len(issues)} issue(s)", file=sys.stderr)
        for issue in issues:
            print(f"  - {issue}", file=sys.stderr)
        return 2
    try:
        manifest = run_scenario(
            args.config,
            output_dir=args.output_dir,
            seed_override=args.seed_override,
            workers=args.workers,
            tolerance_scale=args.tolerance_scale,
        )
    except SpecgalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"{name}: ok ({manifest.wall_time_seconds:.3f} s); "
        f"outputs in {args.output_dir}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
