"""Command-line front end: ``qwscatter <command> [options]``.

Options may come from flags or from a JSON file given with ``--config``;
flags win.  Config keys: ``field_file``, ``params``, ``theta_grid``
(``[start, end, count]``), ``window`` (``[x_min, x_max]``), ``output``,
``format``, ``tolerances`` (``{"tol": .., "eps_theta": ..}``) and the
command-specific keys ``kappa``, ``side``, ``theta``, ``alpha_l``,
``alpha_r``, ``grid_size``, ``n_max``, ``route``, ``seed``.

Exit status: 0 on success, 2 for invalid input, 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from . import io as qio
from .errors import NumericalFailure, ValidationError
from .free_walk import free_spectrum, green_table
from .lattice import (
    PENETRABILITY_TOL,
    THETA_GUARD,
    TWO_PI,
    CoinField,
    HomogeneousParams,
    coin_to_params,
    is_valid_theta,
    load_field,
)
from .scattering import (
    DEFAULT_TOL,
    eigenfunction_infinity,
    infer_barrier_distance,
    resonance_angles,
    smatrix_via_dynamics,
    smatrix_via_interior,
)
from .selftest import format_table, run_selftest

log = logging.getLogger("qwscatter")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
COMMANDS = ("spectrum", "green-table", "smatrix-sweep", "resonances", "evolve",
            "infer-distance", "selftest")


class Settings:
    """Flag values layered over a config document."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self.args, self.config = args, config

    def get(self, name: str, default=None):
        val = getattr(self.args, name, None)
        if val is not None:
            return val
        if name in ("tol", "eps_theta"):
            return self.config.get("tolerances", {}).get(name, default)
        if name in ("theta_start", "theta_end", "theta_count") and "theta_grid" in self.config:
            grid = self.config["theta_grid"]
            return grid[("theta_start", "theta_end", "theta_count").index(name)]
        if name in ("x_min", "x_max") and "window" in self.config:
            return self.config["window"][0 if name == "x_min" else 1]
        key = {"field": "field_file", "out": "output"}.get(name, name)
        return self.config.get(key, default)


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    return doc


def _params(s: Settings) -> HomogeneousParams:
    raw = s.get("params")
    if raw is None:
        return HomogeneousParams(1.0, 0.0)
    if isinstance(raw, str):
        if os.path.exists(raw):
            with open(raw, encoding="utf-8") as fh:
                raw = json.load(fh)
        else:
            try:
                raw = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"--params is neither a file nor JSON: {raw!r}") from exc
    if not isinstance(raw, dict) or "p" not in raw:
        raise ValidationError("params need at least the key 'p'")
    return HomogeneousParams.from_angles(float(raw["p"]), float(raw.get("alpha", 0.0)),
                                         float(raw.get("beta", 0.0)), float(raw.get("gamma", 0.0)))


def _field(s: Settings) -> CoinField:
    path = s.get("field")
    if path is None:
        raise ValidationError("this command needs --field (or 'field_file' in the config)")
    try:
        return load_field(path)
    except OSError as exc:
        raise ValidationError(f"cannot read field file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"field file {path!r} is not valid JSON: {exc}") from exc


def _theta_grid(s: Settings) -> list:
    start = float(s.get("theta_start", 0.0))
    end = float(s.get("theta_end", TWO_PI))
    count = int(s.get("theta_count", 256))
    if count < 1:
        raise ValidationError("theta count must be positive")
    guard = float(s.get("eps_theta", THETA_GUARD))
    kept = []
    for t in np.linspace(start, end, count):
        if is_valid_theta(float(t), guard):
            kept.append(float(t))
        else:
            log.warning("skipping theta = %.17g (outside the valid set)", t)
    return kept


def _threads() -> int:
    raw = os.environ.get("QWSCATTER_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _emit_table(s: Settings, header, rows) -> None:
    fmt = s.get("format", "csv")
    if fmt == "csv":
        qio.write_csv(s.get("out"), header, rows)
    elif fmt == "json":
        qio.write_json(s.get("out"), qio.records(header, rows))
    else:
        raise ValidationError(f"format must be 'csv' or 'json', got {fmt!r}")


def cmd_spectrum(s: Settings) -> None:
    bands = free_spectrum(_params(s))
    if s.get("format", "csv") == "json":
        qio.write_json(s.get("out"), {"band1": list(bands.band1), "band2": list(bands.band2),
                                      "thresholds": list(bands.thresholds)})
    else:
        _emit_table(s, ("band", "start", "end"),
                    [[1, *bands.band1], [2, *bands.band2]])


def cmd_green_table(s: Settings) -> None:
    params = _params(s)
    kappa = s.get("kappa")
    if kappa is None:
        raise ValidationError("green-table needs --kappa-re/--kappa-im (or 'kappa' in the config)")
    kappa = complex(*kappa) if isinstance(kappa, (list, tuple)) else complex(kappa)
    side = s.get("side")
    rows = [qio.green_row(g) for g in green_table(kappa, params, int(s.get("x_min", -10)),
                                                  int(s.get("x_max", 10)), side)]
    _emit_table(s, qio.GREEN_HEADER, rows)


def cmd_smatrix_sweep(s: Settings) -> None:
    field = _field(s)
    field.require_penetrable()
    thetas = _theta_grid(s)
    route = s.get("route", "interior")
    tol = float(s.get("tol", DEFAULT_TOL))
    if route == "interior":
        def job(t):
            return smatrix_via_interior(field, t)
    elif route == "dynamics":
        def job(t):
            return smatrix_via_dynamics(field, t, tol)
    else:
        raise ValidationError(f"route must be 'interior' or 'dynamics', got {route!r}")
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(job, thetas))
    _emit_table(s, qio.SWEEP_HEADER, [qio.sweep_row(r) for r in results])


def _double_barrier_params(field: CoinField) -> tuple:
    n = field.n
    if n < 1:
        raise ValidationError("a double barrier needs n >= 1")
    for x in range(1, n):
        c = field.coins[x]
        if abs(c.matrix - np.eye(2)).max() > PENETRABILITY_TOL:
            raise ValidationError(f"coin at x={x} is not the identity; not a double barrier")
    return coin_to_params(field.coins[0]), coin_to_params(field.coins[n]), n


def cmd_resonances(s: Settings) -> None:
    p0, p1, n = _double_barrier_params(_field(s))
    res = resonance_angles(p0, p1, n, float(s.get("eps_theta", THETA_GUARD)))
    qio.write_json(s.get("out"), res.to_json())


def cmd_evolve(s: Settings) -> None:
    field = _field(s)
    theta = s.get("theta")
    if theta is None:
        raise ValidationError("evolve needs --theta")
    x_min = int(s.get("x_min", -8))
    x_max = int(s.get("x_max", field.n + 8))
    psi = eigenfunction_infinity(field, float(theta), complex(s.get("alpha_l", 1.0)),
                                 complex(s.get("alpha_r", 0.0)), x_min, x_max,
                                 float(s.get("tol", DEFAULT_TOL)), s.get("method", "iterate"))
    _emit_table(s, qio.STATE_HEADER, list(qio.state_rows(psi)))


def cmd_infer_distance(s: Settings) -> None:
    field = _field(s)
    field.require_penetrable()
    n_max = s.get("n_max")
    res = infer_barrier_distance(lambda t: smatrix_via_interior(field, t).rho,
                                 None if n_max is None else int(n_max),
                                 int(s.get("grid_size", 4096)),
                                 float(s.get("eps_theta", THETA_GUARD)))
    qio.write_json(s.get("out"), {"zero_count": res.count, "zeros": res.zeros,
                                  "exact": res.exact,
                                  "threshold_degenerate": res.threshold_degenerate})


def cmd_selftest(s: Settings) -> bool:
    results = run_selftest(int(s.get("seed", 0)))
    with qio.open_output(s.get("out")) as fh:
        fh.write(format_table(results) + "\n")
    return all(r.passed for r in results)


HANDLERS = {
    "spectrum": cmd_spectrum,
    "green-table": cmd_green_table,
    "smatrix-sweep": cmd_smatrix_sweep,
    "resonances": cmd_resonances,
    "evolve": cmd_evolve,
    "infer-distance": cmd_infer_distance,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qwscatter",
                                 description="Scattering computations for 1D quantum walks.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON file with run settings")
    ap.add_argument("--field", help="coin field JSON file")
    ap.add_argument("--params", help="homogeneous coin parameters: JSON text or file")
    ap.add_argument("--theta-start", type=float)
    ap.add_argument("--theta-end", type=float)
    ap.add_argument("--theta-count", type=int)
    ap.add_argument("--theta", type=float, help="single quasi-energy (evolve)")
    ap.add_argument("--kappa-re", type=float)
    ap.add_argument("--kappa-im", type=float)
    ap.add_argument("--side", choices=("+", "-"))
    ap.add_argument("--x-min", type=int)
    ap.add_argument("--x-max", type=int)
    ap.add_argument("--alpha-l", type=complex)
    ap.add_argument("--alpha-r", type=complex)
    ap.add_argument("--route", choices=("interior", "dynamics"))
    ap.add_argument("--method", choices=("iterate", "step", "closed"))
    ap.add_argument("--grid-size", type=int)
    ap.add_argument("--n-max", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output path (default: stdout)")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--tol", type=float)
    ap.add_argument("--eps-theta", type=float)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="qwscatter: %(levelname)s: %(message)s", stream=sys.stderr)
    if args.kappa_re is not None or args.kappa_im is not None:
        args.kappa = complex(args.kappa_re or 0.0, args.kappa_im or 0.0)
    try:
        settings = Settings(args, _load_config(args.config))
        ok = HANDLERS[args.command](settings)
    except ValidationError as exc:
        print(f"qwscatter: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"qwscatter: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if ok is False:
        return EXIT_NUMERICAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
