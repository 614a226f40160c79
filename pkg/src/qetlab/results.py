"""Sweep orchestration and result/frame serialization.

Records emit as JSON Lines with a fixed key order; frames emit as CSV
(t,x,y,z,eps columns, 17 significant digits, lossless round trip) or as a flat
binary grid behind a small validated header.  Everything downstream of a
(scenario, seed) pair is deterministic: sweep points are computed as
independent tasks and merged in task order, so the worker count never changes
the output bytes.
"""

from __future__ import annotations

import json
import math
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__ as ENGINE_VERSION
from .dynamics import DensityFrame, FrameGrid, default_frame_grid, energy_density_frame
from .protocols import (
    ProtocolConfig,
    damping_oscillator,
    damping_spin,
    run_oscillator_protocol,
    run_spin_protocol,
)
from .scenario import Scenario
from .spectral import weighted_spectral_integral

RECORD_KEYS = (
    "scenario_hash",
    "probe",
    "lambda",
    "T",
    "E_m",
    "eta",
    "xi",
    "theta_star",
    "E_o",
    "D_q",
    "eta_prime",
    "theta_prime_star",
    "E_o_prime",
    "D_ho",
    "ratio",
)


@dataclass(frozen=True)
class ResultRecord:
    scenario_hash: str
    probe: str
    lam: float
    T: float
    E_m: float
    eta: float | None
    xi: float
    theta_star: float | None
    E_o: float | None
    D_q: float
    eta_prime: float | None
    theta_prime_star: float | None
    E_o_prime: float | None
    D_ho: float
    ratio: float | None
    engine_version: str = ENGINE_VERSION
    elapsed_s: float = 0.0  # diagnostics only; never serialized

    def to_line(self) -> str:
        values = {
            "scenario_hash": self.scenario_hash,
            "probe": self.probe,
            "lambda": self.lam,
            "T": self.T,
            "E_m": self.E_m,
            "eta": self.eta,
            "xi": self.xi,
            "theta_star": self.theta_star,
            "E_o": self.E_o,
            "D_q": self.D_q,
            "eta_prime": self.eta_prime,
            "theta_prime_star": self.theta_prime_star,
            "E_o_prime": self.E_o_prime,
            "D_ho": self.D_ho,
            "ratio": self.ratio,
        }
        clean = {k: _finite_or_none(values[k]) for k in RECORD_KEYS}
        return json.dumps(clean, allow_nan=False)


def _finite_or_none(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _run_point(scenario: Scenario, probe: str, lam: float, T: float) -> ResultRecord:
    start = time.perf_counter()
    cfg = ProtocolConfig(a_m=scenario.a_m, f_o=scenario.f_o, T=T, lam=lam)
    eta = theta = E_o = None
    eta_p = theta_p = E_o_p = None
    if probe == "spin":
        out = run_spin_protocol(cfg)
        E_m, xi, D_q = out.E_m, out.xi, out.D_q
        eta, theta, E_o = out.eta, out.theta_star, out.E_o
        D_ho = damping_oscillator(scenario.a_m, lam)
    else:
        out = run_oscillator_protocol(cfg)
        E_m, D_ho = out.E_m, out.D_ho
        eta_p, theta_p, E_o_p = out.eta_prime, out.theta_prime_star, out.E_o_prime
        xi = weighted_spectral_integral(scenario.f_o.spectrum(), 0).value
        D_q = damping_spin(scenario.a_m, lam)
    ratio = D_ho / D_q if D_q > 0.0 else math.inf
    return ResultRecord(
        scenario_hash=scenario.scenario_hash,
        probe=probe,
        lam=lam,
        T=T,
        E_m=E_m,
        eta=eta,
        xi=xi,
        theta_star=theta,
        E_o=E_o,
        D_q=D_q,
        eta_prime=eta_p,
        theta_prime_star=theta_p,
        E_o_prime=E_o_p,
        D_ho=D_ho,
        ratio=ratio,
        elapsed_s=time.perf_counter() - start,
    )


def run_scenario(scenario: Scenario, workers: int = 1) -> list[ResultRecord]:
    """All (probe, lambda, T) combinations, in deterministic task order.

    Errors from any sweep point propagate with the sweep coordinate attached.
    """
    tasks = [
        (probe, lam, T)
        for probe in scenario.probes
        for lam in scenario.lambdas
        for T in scenario.T_list
    ]

    def run(task):
        probe, lam, T = task
        try:
            return _run_point(scenario, probe, lam, T)
        except Exception as exc:
            raise type(exc)(
                f"sweep point (probe={probe}, lambda={lam}, T={T}): {exc}"
            ) from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, tasks))
    return [run(t) for t in tasks]


def emit_records(records, path) -> None:
    """JSON Lines, one record per line, fixed key order; empty input is a valid file."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(rec.to_line())
            fh.write("\n")


def load_records(path) -> list[dict]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def scenario_frames(scenario: Scenario, workers: int = 1) -> list[DensityFrame]:
    """Density frames at the scenario's times (source field a_m, shared grid policy)."""
    times = scenario.times or (0.0, max(scenario.T_list))

    def build(t: float) -> DensityFrame:
        if scenario.grid_half_extent is not None:
            grid = FrameGrid(
                n=scenario.grid_n,
                half_extent=scenario.grid_half_extent,
                center=scenario.a_m.center,
            )
        else:
            grid = default_frame_grid(scenario.a_m, t, n=scenario.grid_n)
        return energy_density_frame(scenario.a_m, t, grid)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(build, times))
    return [build(t) for t in times]


def emit_frame_csv(frame: DensityFrame, path) -> None:
    """Columns t,x,y,z,eps at 17 significant digits (lossless float round trip)."""
    pos = frame.grid.position_mesh().reshape(-1, 3)
    cols = np.column_stack(
        [np.full(pos.shape[0], frame.t), pos, frame.eps.reshape(-1)]
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,x,y,z,eps\n")
        np.savetxt(fh, cols, delimiter=",", fmt="%.17g")


def load_frame_csv(path) -> tuple[float, np.ndarray]:
    """Round-trip loader: returns (t, eps values in row order)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    return float(data[0, 0]), data[:, 4]


_MAGIC = b"QETFRAME"
_HEADER = struct.Struct("<8sI I d d 3d")  # magic, version, n, dx, t, origin


def emit_frame_binary(frame: DensityFrame, path) -> None:
    """Flat float64 grid with a validated header (dims, spacing, time, origin)."""
    grid = frame.grid
    origin = np.asarray(grid.center, dtype=float) - grid.half_extent
    header = _HEADER.pack(_MAGIC, 1, grid.n, grid.dx, frame.t, *origin)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(frame.eps, dtype="<f8").tobytes())


def load_frame_binary(path) -> dict:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, n, dx, t, ox, oy, oz = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != 1:
            raise ValueError(f"{path}: unsupported version {version}")
        raw = fh.read()
    if len(raw) != 8 * n**3:
        raise ValueError(f"{path}: expected {n**3} float64 values, found {len(raw)} bytes")
    body = np.frombuffer(raw, dtype="<f8")
    return {
        "t": t,
        "n": n,
        "dx": dx,
        "origin": (ox, oy, oz),
        "eps": body.reshape(n, n, n),
    }
