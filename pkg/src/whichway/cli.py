"""Cavity which-way detector: figure tables, invariant checks, sampling, wave/particle protocol.

    whichway figure {1,2,3} [--config PATH] [--out PATH] [--format csv|json]
    whichway verify [--config PATH] [--seed N]
    whichway sample [--config PATH] [--out PATH] [--seed N] [--n N]
    whichway waveparticle [--config PATH] [--out PATH]

Exit codes: 0 success, 1 invariant failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from whichway import eraser, sampling, verify
from whichway import waveparticle as wpart

EXIT_OK, EXIT_INVARIANT, EXIT_INPUT = 0, 1, 2
ROW_IDENTITY_TOL = 1e-9

# allowed keys per config section, with defaults
SCHEMA = {
    "physics": {
        "lambda_plus": None, "lambda_minus": None, "phi": 0.0,
        "d": 4.0, "k": 0.0, "s": 1.0, "x": 1.0,
    },
    "figure": {"points": 601, "x_range": [-6.0, 6.0], "s_range": [0.0, 5.0], "k_range": [-2.0, 2.0]},
    "detectors": {"D1": [1.0, 5.0], "D2": [-1.0, 1.0], "D3": [-5.0, -1.0]},
    "protocol": {"convention": "bare"},
    "sampling": {
        "scenario": "which-way", "n": 100_000, "seed": 0, "shards": 1, "bins": 200,
        "bin_width": 0.1, "bin_centers": None, "phase_scan_points": 0, "convention": "unitary",
    },
    "verify": {"seed": 0, "scale": 1},
    "output": {"format": "csv"},
}


class ConfigError(ValueError):
    pass


class InvariantError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    sections: dict = field(default_factory=dict)

    def __getitem__(self, section):
        return self.sections[section]

    @property
    def lambdas(self) -> tuple[float, float]:
        lp, lm = self["physics"]["lambda_plus"], self["physics"]["lambda_minus"]
        if lp is None and lm is None:
            return wpart.INV_SQRT2, wpart.INV_SQRT2
        if lm is None:
            return float(lp), math.sqrt(max(0.0, 1.0 - lp * lp))
        if lp is None:
            return math.sqrt(max(0.0, 1.0 - lm * lm)), float(lm)
        return float(lp), float(lm)

    def figure_params(self) -> eraser.FigureParams:
        ph, fg = self["physics"], self["figure"]
        lp, lm = self.lambdas
        return eraser.FigureParams(
            lp, lm, float(ph["phi"]), float(ph["d"]), float(ph["k"]), float(ph["s"]), float(ph["x"]),
            int(fg["points"]), tuple(map(float, fg["x_range"])), tuple(map(float, fg["s_range"])),
            tuple(map(float, fg["k_range"])),
        )

    def regions(self) -> wpart.DetectorRegions:
        dt = self["detectors"]
        return wpart.DetectorRegions(*(tuple(map(float, dt[n])) for n in ("D1", "D2", "D3")))

    def protocol(self) -> wpart.ProtocolConfig:
        ph = self["physics"]
        lp, lm = self.lambdas
        return wpart.ProtocolConfig(
            lp, lm, float(ph["phi"]), float(ph["d"]), float(ph["k"]), float(ph["s"]),
            self["protocol"]["convention"], self.regions(),
        )

    def screen(self) -> sampling.ScreenDensity:
        ph, sm = self["physics"], self["sampling"]
        lp, lm = self.lambdas
        return sampling.ScreenDensity(
            sm["scenario"], lp, lm, float(ph["phi"]), float(ph["d"]), float(ph["k"]), float(ph["s"]),
            sm["convention"], self.regions(),
        )

    def validate(self) -> None:
        """Build every module's parameter object so preconditions fail early."""
        p = self.figure_params()
        if p.points < 1:
            raise ConfigError("figure.points must be positive")
        self.protocol()
        self.screen()
        sm = self["sampling"]
        if int(sm["n"]) < 1:
            raise ConfigError("sampling.n must be positive")
        if int(sm["shards"]) < 1 or int(sm["bins"]) < 1:
            raise ConfigError("sampling.shards and sampling.bins must be positive")
        if float(sm["bin_width"]) <= 0:
            raise ConfigError("sampling.bin_width must be positive")
        if self["output"]["format"] not in ("csv", "json"):
            raise ConfigError("output.format must be csv or json")


def load_config(path: str | os.PathLike | None) -> ExperimentConfig:
    """Read a YAML config; unknown sections or keys are errors."""
    raw = {}
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping of sections")
    sections = {}
    for name, defaults in SCHEMA.items():
        given = raw.pop(name, None) or {}
        if not isinstance(given, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        unknown = set(given) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
        sections[name] = {**defaults, **given}
    if raw:
        raise ConfigError(f"unknown config sections: {sorted(raw)}")
    return ExperimentConfig(sections)


def _fmt(v) -> str:
    return format(float(v), ".17g")


def write_atomic(path: str | os.PathLike | None, text: str) -> None:
    """Write ``text`` via temp file + rename; ``None`` means stdout."""
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        # mkstemp creates 0600; give the result ordinary umask permissions
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def render_figure(table: eraser.FigureTable, fmt: str) -> str:
    if table.max_identity_residual() > ROW_IDENTITY_TOL:
        raise InvariantError(
            f"V_x^2+K_x^2 residual {table.max_identity_residual():.3e} exceeds {ROW_IDENTITY_TOL:g}"
        )
    cols = table.columns
    data = np.column_stack([table.column(c) for c in cols])
    if fmt == "csv":
        return _csv_text(cols, data.tolist())
    payload = {
        "figure": table.mode,
        "params": {k: v for k, v in vars(table.params).items()},
        "columns": list(cols),
        "rows": data.tolist(),
    }
    return json.dumps(payload, indent=1) + "\n"


def cmd_figure(n: int, cfg: ExperimentConfig, out, fmt: str) -> int:
    if n not in (1, 2, 3):
        raise ConfigError(f"invalid figure id {n}")
    table = eraser.figure_scan(f"fig{n}", cfg.figure_params())
    write_atomic(out, render_figure(table, fmt))
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, seed: int | None = None, fault: str | None = None) -> int:
    vs = cfg["verify"]
    results = verify.run_suite(
        seed=int(vs["seed"] if seed is None else seed), fault=fault, scale=int(vs["scale"])
    )
    print(verify.format_report(results))
    ok = all(r.passed for r in results)
    print("all invariants hold" if ok else "invariant failure")
    return EXIT_OK if ok else EXIT_INVARIANT


def _visibility_rows(run: sampling.SampleRun, cfg: ExperimentConfig) -> list[list]:
    sd, sm = run.density, cfg["sampling"]
    if sd.scenario == "no-detector":
        return []
    width = float(sm["bin_width"])
    centers = sm["bin_centers"]
    if centers is None:
        locus = float(eraser.eraser_locus(sd.d, sd.k, sd.s))
        centers = sorted({round(c, 12) for c in np.linspace(-3, 3, 13)} | {locus})
    rows = []
    for c in map(float, centers):
        est = sampling.empirical_conditioned_visibility(
            run, (c - width / 2, c + width / 2), int(sm["phase_scan_points"]) or None
        )
        vec = sampling.posterior_vectors(sd, np.array([c]))[:, 0]
        theory = 2 * abs(vec[0] * np.conj(vec[1]))
        value = float("nan") if est.value is None else est.value
        rows.append([est.lo, est.hi, est.count, value, float(theory)])
    return rows


def cmd_sample(cfg: ExperimentConfig, out, fmt: str) -> int:
    sm = cfg["sampling"]
    sd = cfg.screen()
    run = sampling.sample(sd, int(sm["n"]), int(sm["seed"]), shards=int(sm["shards"]), bins=int(sm["bins"]))
    edges = run.edges
    cdf_edges = np.interp(edges, *sd.cdf_table)
    expected = run.n * np.diff(cdf_edges)
    hist = [[edges[i], edges[i + 1], int(run.counts[i]), float(expected[i])] for i in range(len(run.counts))]
    vis = _visibility_rows(run, cfg)
    summary = {
        "scenario": sd.scenario, "n": run.n, "seed": run.seed, "shards": run.shards,
        "rng": run.algorithm, "normalization": sd.normalization, **run.statistics,
    }
    hist_cols = ("bin_lo", "bin_hi", "count", "expected")
    vis_cols = ("bin_lo", "bin_hi", "count", "V_x_empirical", "V_x_theory")
    if fmt == "json":
        write_atomic(out, json.dumps({
            "summary": summary,
            "histogram": {"columns": hist_cols, "rows": hist},
            "visibility": {"columns": vis_cols, "rows": vis},
        }, indent=1) + "\n")
    else:
        write_atomic(out, _csv_text(hist_cols, hist))
        if vis and out not in (None, "-"):
            p = Path(out)
            write_atomic(p.with_name(f"{p.stem}_visibility{p.suffix or '.csv'}"), _csv_text(vis_cols, vis))
    print(json.dumps(summary), file=sys.stderr if out in (None, "-") else sys.stdout)
    return EXIT_OK


def _state_json(vec) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in vec]


def waveparticle_report(cfg: wpart.ProtocolConfig) -> dict:
    """Per-detector outcome of the single-cavity protocol.

    Mode states and fidelities use ``cfg.convention``; probabilities always
    come from the unitary pipeline.
    """
    run = wpart.run_protocol(cfg)
    phys = wpart.run_protocol(replace(cfg, convention="unitary"))
    probs = wpart.click_probabilities(phys.postselected, cfg.regions)
    superpos = wpart.WAVE + wpart.PARTICLE
    detectors = {}
    for name, iv in cfg.regions.items():
        center = cfg.regions.center(name)
        ms, dens = wpart.click_state(run.postselected, center)
        rho, _ = wpart.region_state(run.postselected, iv)
        detectors[name] = {
            "interval": list(iv),
            "click_probability": probs[name],
            "center": center,
            "center_state": _state_json(ms.canonical().vector),
            "center_fidelity_wave": ms.fidelity(wpart.WAVE),
            "center_fidelity_particle": ms.fidelity(wpart.PARTICLE),
            "center_fidelity_superposition": ms.fidelity(superpos),
            "region_fidelity_wave": rho.fidelity(wpart.WAVE),
            "region_fidelity_particle": rho.fidelity(wpart.PARTICLE),
            "region_fidelity_superposition": rho.fidelity(superpos),
        }
    return {
        "convention": cfg.convention,
        "params": {"lambda_plus": cfg.lambda_plus, "lambda_minus": cfg.lambda_minus,
                   "phi": cfg.phi, "d": cfg.d, "k": cfg.k, "s": cfg.s},
        "postselection_probability": phys.postselection_probability,
        "path_norms": run.path_norms(),
        "detectors": detectors,
    }


def cmd_waveparticle(cfg: ExperimentConfig, out, fmt: str) -> int:
    rep = waveparticle_report(cfg.protocol())
    if fmt == "json":
        write_atomic(out, json.dumps(rep, indent=1) + "\n")
        return EXIT_OK
    cols = ("detector", "lo", "hi", "click_probability", "center_fidelity_wave",
            "center_fidelity_particle", "center_fidelity_superposition", "region_fidelity_wave",
            "region_fidelity_particle", "region_fidelity_superposition")
    rows = []
    for name, d in rep["detectors"].items():
        rows.append([name, d["interval"][0], d["interval"][1]] + [d[c] for c in cols[3:]])
    write_atomic(out, _csv_text(cols, rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int)
    common.add_argument("--n", type=int)

    parser = argparse.ArgumentParser(prog="whichway", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    fig = sub.add_parser("figure", parents=[common], help="tabulate V_x, K_x for a figure")
    fig.add_argument("number", type=int, choices=(1, 2, 3))
    ver = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    ver.add_argument("--inject-fault", choices=verify.FAULTS, help=argparse.SUPPRESS)
    sub.add_parser("sample", parents=[common], help="Monte Carlo screen detections")
    sub.add_parser("waveparticle", parents=[common], help="single-cavity wave/particle protocol")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["sampling"]["seed"] = args.seed
        if args.n is not None:
            cfg["sampling"]["n"] = args.n
        if args.format is not None:
            cfg["output"]["format"] = args.format
        cfg.validate()
        fmt = cfg["output"]["format"]
        if args.command == "figure":
            return cmd_figure(args.number, cfg, args.out, fmt)
        if args.command == "verify":
            return cmd_verify(cfg, args.seed, args.inject_fault)
        if args.command == "sample":
            return cmd_sample(cfg, args.out, fmt)
        return cmd_waveparticle(cfg, args.out, fmt)
    except InvariantError as exc:
        print(f"whichway: invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, OSError, TypeError) as exc:
        print(f"whichway: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
