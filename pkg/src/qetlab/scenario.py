"""Declarative run configuration: strict-schema parsing and validation.

Scenarios are YAML mappings.  Unknown keys are errors (with a nearest-match
suggestion), not warnings; physics-invalid values carry the offending field
path.  Natural units c = hbar = 1 throughout: lengths in units of the declared
base length, energies in its inverse.
"""

from __future__ import annotations

import difflib
import hashlib
import json
from dataclasses import dataclass, field

import yaml

from .errors import ValidationError
from .fields import CurlGaussian, RadialWindow, check_divergence_free
from .protocols import min_causal_wait

PROBES = ("spin", "oscillator", "both")

_TOP_KEYS = {
    "seed", "probe", "T", "lambda", "fields", "grid", "times", "tolerances", "output",
}
_FIELD_KEYS = {"amplitude", "sigma", "center", "axis"}
_WINDOW_KEYS = {"radius", "center"}
_FIELDS_KEYS = {"a_m", "f_o", "window"}
_GRID_KEYS = {"n", "half_extent"}
_TOL_KEYS = {"divergence"}
_OUTPUT_KEYS = {"results", "frames_prefix"}


@dataclass(frozen=True)
class Scenario:
    a_m: CurlGaussian
    f_o: CurlGaussian
    window: RadialWindow
    probe: str = "both"
    T_list: tuple = (12.0,)
    lambdas: tuple = (1.0,)
    seed: int = 0
    grid_n: int = 128
    grid_half_extent: float | None = None
    times: tuple = ()
    divergence_tol: float = 1e-6
    results_name: str = "results.jsonl"
    frames_prefix: str = "frame"
    canonical: dict = field(default_factory=dict, compare=False)

    @property
    def scenario_hash(self) -> str:
        payload = json.dumps(self.canonical, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    @property
    def probes(self) -> tuple:
        return ("spin", "oscillator") if self.probe == "both" else (self.probe,)


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, path: str, message: str) -> None:
        self.errors.append(f"{path}: {message}")

    def check_keys(self, mapping: dict, allowed: set, path: str) -> None:
        for key in mapping:
            if key not in allowed:
                hint = difflib.get_close_matches(str(key), sorted(allowed), n=1)
                suffix = f" (did you mean {hint[0]!r}?)" if hint else ""
                self.add(path, f"unknown key {key!r}{suffix}")


def _as_scalar_or_list(value, path: str, errs: _Collector) -> list[float]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    if isinstance(value, list) and value and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return [float(v) for v in value]
    errs.add(path, "expected a number or a nonempty list of numbers")
    return []


def _parse_field(spec, path: str, errs: _Collector) -> CurlGaussian | None:
    if not isinstance(spec, dict):
        errs.add(path, "expected a mapping with amplitude/sigma/center/axis")
        return None
    errs.check_keys(spec, _FIELD_KEYS, path)
    sigma = spec.get("sigma")
    if not isinstance(sigma, (int, float)) or isinstance(sigma, bool) or sigma <= 0:
        errs.add(f"{path}.sigma", f"must be a positive number, got {sigma!r}")
        return None
    amplitude = spec.get("amplitude", 1.0)
    if not isinstance(amplitude, (int, float)) or isinstance(amplitude, bool):
        errs.add(f"{path}.amplitude", "must be a number")
        return None
    try:
        return CurlGaussian(
            amplitude=float(amplitude),
            sigma=float(sigma),
            center=tuple(spec.get("center", (0.0, 0.0, 0.0))),
            axis=tuple(spec.get("axis", (0.0, 0.0, 1.0))),
        )
    except (ValidationError, TypeError) as exc:
        errs.add(path, str(exc))
        return None


def scenario_from_dict(raw: dict) -> Scenario:
    """Validate a parsed mapping into a Scenario; raises with every error found."""
    errs = _Collector()
    if not isinstance(raw, dict):
        raise ValidationError(["scenario: top level must be a mapping"])
    errs.check_keys(raw, _TOP_KEYS, "scenario")

    probe = raw.get("probe", "both")
    if probe not in PROBES:
        errs.add("scenario.probe", f"must be one of {PROBES}, got {probe!r}")
        probe = "both"

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errs.add("scenario.seed", f"must be a nonnegative integer, got {seed!r}")
        seed = 0

    if "T" not in raw:
        errs.add("scenario.T", "required (a time or ascending list of times)")
        T_list: list[float] = []
    else:
        T_list = _as_scalar_or_list(raw["T"], "scenario.T", errs)
        if T_list and sorted(T_list) != T_list:
            errs.add("scenario.T", "list must be sorted ascending")

    lambdas = _as_scalar_or_list(raw.get("lambda", 1.0), "scenario.lambda", errs)
    for lam in lambdas:
        if lam < 0.0:
            errs.add("scenario.lambda", f"must be nonnegative, got {lam}")

    fields_spec = raw.get("fields")
    a_m = f_o = None
    window = None
    if not isinstance(fields_spec, dict):
        errs.add("scenario.fields", "required mapping with at least a_m")
    else:
        errs.check_keys(fields_spec, _FIELDS_KEYS, "scenario.fields")
        if "a_m" not in fields_spec:
            errs.add("scenario.fields.a_m", "required")
        else:
            a_m = _parse_field(fields_spec["a_m"], "scenario.fields.a_m", errs)
        if "f_o" in fields_spec:
            f_o = _parse_field(fields_spec["f_o"], "scenario.fields.f_o", errs)
        elif a_m is not None:
            f_o = a_m  # default: operate with the measurement profile
        wspec = fields_spec.get("window")
        if wspec is not None:
            if not isinstance(wspec, dict):
                errs.add("scenario.fields.window", "expected a mapping")
            else:
                errs.check_keys(wspec, _WINDOW_KEYS, "scenario.fields.window")
                try:
                    window = RadialWindow(
                        radius=float(wspec.get("radius", 0.0)),
                        center=tuple(wspec.get("center", a_m.center if a_m else (0, 0, 0))),
                    )
                except (ValidationError, TypeError) as exc:
                    errs.add("scenario.fields.window", str(exc))
        if window is None and a_m is not None:
            window = RadialWindow(radius=3.0 * a_m.sigma, center=a_m.center)

    grid_n = 128
    grid_half = None
    gspec = raw.get("grid")
    if gspec is not None:
        if not isinstance(gspec, dict):
            errs.add("scenario.grid", "expected a mapping")
        else:
            errs.check_keys(gspec, _GRID_KEYS, "scenario.grid")
            grid_n = gspec.get("n", 128)
            if not isinstance(grid_n, int) or isinstance(grid_n, bool) or grid_n < 8:
                errs.add("scenario.grid.n", f"must be an integer >= 8, got {grid_n!r}")
                grid_n = 128
            grid_half = gspec.get("half_extent")
            if grid_half is not None and (
                not isinstance(grid_half, (int, float)) or grid_half <= 0
            ):
                errs.add("scenario.grid.half_extent", "must be positive when given")
                grid_half = None

    times = ()
    if "times" in raw:
        tlist = _as_scalar_or_list(raw["times"], "scenario.times", errs)
        for t in tlist:
            if t < 0.0:
                errs.add("scenario.times", f"times must be nonnegative, got {t}")
        times = tuple(tlist)

    divergence_tol = 1e-6
    tspec = raw.get("tolerances")
    if tspec is not None:
        if not isinstance(tspec, dict):
            errs.add("scenario.tolerances", "expected a mapping")
        else:
            errs.check_keys(tspec, _TOL_KEYS, "scenario.tolerances")
            divergence_tol = tspec.get("divergence", 1e-6)
            if not isinstance(divergence_tol, (int, float)) or divergence_tol <= 0:
                errs.add("scenario.tolerances.divergence", "must be positive")
                divergence_tol = 1e-6

    results_name = "results.jsonl"
    frames_prefix = "frame"
    ospec = raw.get("output")
    if ospec is not None:
        if not isinstance(ospec, dict):
            errs.add("scenario.output", "expected a mapping")
        else:
            errs.check_keys(ospec, _OUTPUT_KEYS, "scenario.output")
            results_name = str(ospec.get("results", results_name))
            frames_prefix = str(ospec.get("frames_prefix", frames_prefix))

    # physics gates need both fields
    if a_m is not None and f_o is not None and T_list:
        floor = min_causal_wait(a_m, f_o)
        for T in T_list:
            if T <= floor:
                errs.add(
                    "scenario.T",
                    f"T = {T} is in the causal-violation regime; need T > {floor:.6g}",
                )
        for name, fld in (("a_m", a_m), ("f_o", f_o)):
            report = check_divergence_free(fld, tol=float(divergence_tol), n=21)
            if not report.passed:
                errs.add(
                    f"scenario.fields.{name}",
                    f"fails the divergence-free check (residual {report.max_residual:.3e})",
                )

    if errs.errors:
        raise ValidationError(errs.errors)

    canonical = _canonical_dict(
        a_m, f_o, window, probe, T_list, lambdas, seed, grid_n, grid_half, times, divergence_tol
    )
    return Scenario(
        a_m=a_m,
        f_o=f_o,
        window=window,
        probe=probe,
        T_list=tuple(T_list),
        lambdas=tuple(lambdas),
        seed=seed,
        grid_n=grid_n,
        grid_half_extent=grid_half,
        times=times,
        divergence_tol=float(divergence_tol),
        results_name=results_name,
        frames_prefix=frames_prefix,
        canonical=canonical,
    )


def _canonical_dict(a_m, f_o, window, probe, T_list, lambdas, seed, grid_n, grid_half, times, dtol):
    def fdict(fld: CurlGaussian) -> dict:
        return {
            "amplitude": fld.amplitude,
            "sigma": fld.sigma,
            "center": list(fld.center),
            "axis": list(fld.axis),
        }

    return {
        "a_m": fdict(a_m),
        "f_o": fdict(f_o),
        "window": {"radius": window.radius, "center": list(window.center)},
        "probe": probe,
        "T": list(T_list),
        "lambda": list(lambdas),
        "seed": seed,
        "grid": {"n": grid_n, "half_extent": grid_half},
        "times": list(times),
        "tolerances": {"divergence": dtol},
    }


def parse_scenario(path) -> Scenario:
    """Load and validate a scenario file; all validation errors are reported at once."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ValidationError([f"{path}: malformed YAML: {exc}"]) from exc
    if raw is None:
        raise ValidationError([f"{path}: empty scenario"])
    return scenario_from_dict(raw)
