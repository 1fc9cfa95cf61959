"""Command-line driver: ``dwke {simulate,kernel-check,envelope,selfsim,support}``.

Every command writes into a fresh run directory under ``--out`` holding a
copy of the effective configuration and the command's outputs.

Exit codes: 0 pass, 2 configuration or validation error, 3 runtime failure,
4 check failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path

import numpy as np

from dwke import envelopes as env_mod
from dwke import kernel, oracle, selfsimilar
from dwke.integrator import COMPLETED, IntegratorConfig, IntegratorError, integrate, read_trajectory_csv
from dwke.spectrum import (
    FrequencySet,
    InitialData,
    SpectrumError,
    closure_set,
    make_spectrum,
    random_spectrum,
    spectrum_from_list,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_CHECK = 0, 2, 3, 4

log = logging.getLogger("dwke")

REFERENCE_SIMULATION = {
    "initial": {"M1": 0.5, "tail": [[2, 0.5]]},
    "cutoff": 64,
    "integrator": {"t_end": 100.0},
}

DEFAULTS = {
    "simulate": REFERENCE_SIMULATION,
    "kernel-check": {"R": 200, "K": 8, "tolerance": 1e-12},
    "envelope": {**REFERENCE_SIMULATION, "t0": 0.0, "fit_window": [50.0, 100.0], "fit_bracket": [-1.05, -0.45]},
    "selfsim": {"mode": "continue", "lambda0": [2.0, 2.0], "N": 4, "delta": 1e-3},
    "support": {"set": [1, 2], "window": 12},
}

KNOWN_KEYS = {
    "simulate": {"initial", "cutoff", "integrator"},
    "kernel-check": {"R", "K", "tolerance", "spectra", "seed"},
    "envelope": {"initial", "cutoff", "integrator", "trajectory", "t0", "fit_window", "fit_bracket", "tolerance"},
    "selfsim": {"mode", "lambda0", "N", "delta", "n_starts", "seed"},
    "support": {"set", "window"},
}


class ConfigError(ValueError):
    pass


# -- configuration and run directories --------------------------------------


def load_config(command: str, path: str | None, seed: int | None) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS[command]))
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(user) - KNOWN_KEYS[command]
        if unknown:
            raise ConfigError(f"unknown keys for {command}: {sorted(unknown)}")
        if command == "envelope" and "trajectory" in user:
            for k in ("initial", "cutoff", "integrator"):
                cfg.pop(k, None)
        cfg.update(user)
    if seed is not None:
        cfg["seed"] = seed
    return cfg


def make_run_dir(out: str, command: str) -> Path:
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S-%f")
    d = Path(out) / f"{command}-{stamp}"
    d.mkdir(parents=True, exist_ok=False)
    return d


def _num(x: float):
    """JSON has no infinities; keep them readable as strings."""
    return x if np.isfinite(x) else str(x)


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)


def _simulation_inputs(cfg: dict, threads: int):
    try:
        init = InitialData.from_dict(cfg["initial"])
        cutoff = int(cfg["cutoff"])
        icfg = IntegratorConfig.from_dict({**cfg.get("integrator", {}), "threads": threads})
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from exc
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return make_spectrum(init, cutoff), icfg


# -- commands ----------------------------------------------------------------


def cmd_simulate(cfg: dict, run: Path, threads: int) -> int:
    placed, icfg = _simulation_inputs(cfg, threads)
    traj = integrate(placed.spectrum, icfg)
    traj.write_csv(run / "trajectory.csv")
    summary = traj.summary() | {"rescale": placed.rescale}
    _write_json(run / "summary.json", summary)
    print(f"{traj.reason}: {len(traj.samples)} samples, max mass drift {traj.max_mass_drift:.3g} -> {run}")
    return EXIT_OK if traj.reason == COMPLETED else EXIT_RUNTIME


def cmd_kernel_check(cfg: dict, run: Path, threads: int, c_shift: int) -> int:
    tol = float(cfg.get("tolerance", 1e-12))
    if "spectra" in cfg:
        spectra = [spectrum_from_list(v, normalize=False) for v in cfg["spectra"]]
    else:
        R, K = int(cfg["R"]), int(cfg["K"])
        if not (R >= 1 and 2 <= K <= 12):
            raise ConfigError("need R >= 1 and 2 <= K <= 12")
        rng = np.random.default_rng(cfg.get("seed", 0))
        spectra = [random_spectrum(rng, K) for _ in range(R)]
    cases = []
    for idx, s in enumerate(spectra):
        n_max = 2 * s.cutoff - 1
        padded = np.zeros(n_max)
        padded[: s.cutoff] = s.values
        closed = kernel.rhs(padded, threads=threads, c_shift=c_shift)
        err = oracle.scaled_errors(closed, s, n_max)
        cases.append(
            {
                "index": idx,
                "max_error": _num(float(err.max())),
                "worst_row": int(err.argmax()) + 1,
                "spectrum": s.values.tolist(),
                "rhs": closed.tolist(),
                "oracle": oracle.oracle_rhs(s, n_max).tolist(),
            }
        )
    cases.sort(key=lambda c: -float(c["max_error"]))
    worst = float(cases[0]["max_error"])
    ok = worst <= tol
    report = {
        "backend": kernel.BACKEND,
        "c_shift": c_shift,
        "spectra": len(cases),
        "tolerance": tol,
        "max_error": _num(worst),
        "pass": ok,
        "worst_cases": cases[:5],
    }
    _write_json(run / "kernel_check.json", report)
    if not ok:
        _write_json(run / "replay_spectrum.json", {"spectra": [cases[0]["spectrum"]]})
    print(f"kernel-check: {len(cases)} spectra, max scaled error {worst:.3g} ({'pass' if ok else 'FAIL'})")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_envelope(cfg: dict, run: Path, threads: int) -> int:
    if "trajectory" in cfg:
        try:
            traj = read_trajectory_csv(cfg["trajectory"])
        except OSError as exc:
            raise ConfigError(f"cannot read trajectory: {exc}") from exc
    else:
        placed, icfg = _simulation_inputs(cfg, threads)
        traj = integrate(placed.spectrum, icfg)
        traj.write_csv(run / "trajectory.csv")
        if traj.reason != COMPLETED:
            print(f"integration ended early: {traj.reason}", file=sys.stderr)
            return EXIT_RUNTIME
    t0 = float(cfg.get("t0", traj.samples[0].t))
    anchor = [s for s in traj.samples if s.t == t0]
    if not anchor:
        raise ConfigError(f"no trajectory sample at t0 = {t0}")
    env = env_mod.envelope_constants(anchor[0].spectrum, t0)
    rep = env_mod.check_envelopes(traj, env, cfg.get("tolerance"))
    ok = rep.ok
    if "fit_window" in cfg:
        lo, hi = cfg["fit_window"]
        if traj.samples[-1].t >= hi:
            slope = env_mod.fit_decay_exponent(traj, 1, (lo, hi))
            rep.fit = {"n": 1, "window": [lo, hi], "slope": slope}
            if "fit_bracket" in cfg:
                b_lo, b_hi = cfg["fit_bracket"]
                inside = b_lo <= slope <= b_hi
                rep.fit |= {"bracket": [b_lo, b_hi], "inside": inside}
                ok = ok and inside
    rep.write_json(run / "envelope_report.json")
    print(f"envelope: {rep.checked} samples, {len(rep.violations)} violations, fit {rep.fit.get('slope', 'n/a')}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_selfsim(cfg: dict, run: Path) -> int:
    mode = cfg.get("mode", "continue")
    N = int(cfg["N"])
    if mode == "continue":
        l1, l2 = cfg["lambda0"]
        try:
            p = selfsimilar.continue_solution(float(l1), float(l2), N, float(cfg["delta"]))
        except selfsimilar.PositivityViolation as exc:
            exc.profile.write_json(run / "counterexample.json")
            print(f"selfsim: {exc}", file=sys.stderr)
            return EXIT_CHECK
        except selfsimilar.ConvergenceError as exc:
            print(f"selfsim: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        p.write_json(run / "profile.json")
        print(f"selfsim: positive profile, residual {p.residual_norm:.3g}")
        return EXIT_OK
    if mode == "enumerate":
        n_starts = int(cfg.get("n_starts", 10_000))
        roots = selfsimilar.enumerate_full_truncation(N, n_starts, int(cfg.get("seed", 0)))
        _write_json(run / "roots.json", {"N": N, "n_starts": n_starts, "roots": [r.to_dict() for r in roots]})
        nonzero = [r for r in roots if r.fully_nonzero]
        print(f"selfsim: {len(roots)} roots, {len(nonzero)} fully nonzero, {sum(r.positive for r in roots)} positive")
        return EXIT_OK
    raise ConfigError(f"unknown selfsim mode {mode!r}")


def cmd_support(cfg: dict, run: Path) -> int:
    fs = closure_set(FrequencySet(tuple(cfg["set"]), int(cfg["window"])))
    _write_json(run / "support.json", {"set": cfg["set"], "window": fs.window, "closure": list(fs.elements)})
    print("{" + ",".join(map(str, fs.elements)) + "}")
    return EXIT_OK


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config; defaults apply to missing keys")
    common.add_argument("--out", default="runs", help="parent directory for run directories")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--threads", type=int, default=1, help="threads for right-hand-side evaluation")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dwke", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate a spectrum in time")
    kc = sub.add_parser("kernel-check", parents=[common], help="compare closed forms with the oracle")
    kc.add_argument("--inject-c-typo", action="store_true", help="evaluate C_n with the unshifted first group")
    sub.add_parser("envelope", parents=[common], help="check decay envelopes on a trajectory")
    sub.add_parser("selfsim", parents=[common], help="continue or enumerate self-similar profiles")
    sub.add_parser("support", parents=[common], help="closure of an interaction set")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.command, args.config, args.seed)
        run = make_run_dir(args.out, args.command)
        _write_json(run / "config.json", cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg, run, args.threads)
        if args.command == "kernel-check":
            return cmd_kernel_check(cfg, run, args.threads, 0 if args.inject_c_typo else kernel.C_SHIFT)
        if args.command == "envelope":
            return cmd_envelope(cfg, run, args.threads)
        if args.command == "selfsim":
            return cmd_selfsim(cfg, run)
        return cmd_support(cfg, run)
    except (
        ConfigError,
        SpectrumError,
        IntegratorError,
        env_mod.EnvelopeError,
        selfsimilar.SelfSimilarError,
        KeyError,
        TypeError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
