"""Command-line entry point: verify, spectrum, expand, evolve, causality."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .causality import CausalityConfig, ConfigError, emit_report, fmt_float, run_scan
from .padic import FieldContext, format_fraction
from .spinor import FrequencyMagnitude, lambda_a_u, matrix_to_json
from .states import SpinorWaveletState, evaluate, evolve, localized_plane_wave
from .verify import run_checks
from .wavelets import WaveletIndex3D, expand_ball_indicator

log = logging.getLogger("padic_dirac")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- config


@dataclass
class LoadedConfig:
    path: str | None
    raw: str
    data: dict


def load_config(path: str | None) -> LoadedConfig:
    if path is None:
        return LoadedConfig(None, "", {})
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}:1: config must be a JSON object")
    return LoadedConfig(path, raw, data)


def key_line(raw: str, key: str) -> int:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', raw)
    return raw.count("\n", 0, m.start()) + 1 if m else 1


def config_error(cfg: LoadedConfig, exc: ConfigError) -> UsageError:
    where = f"{cfg.path}:{key_line(cfg.raw, exc.key)}" if cfg.path else "<defaults>"
    return UsageError(f"{where}: {exc}")


def resolve(defaults: dict, cfg: LoadedConfig) -> dict:
    out = dict(defaults)
    for k, v in cfg.data.items():
        if k not in defaults:
            raise config_error(cfg, ConfigError(k, "unknown key"))
        out[k] = v
    return out


def _need_int(cfg: LoadedConfig, d: dict, *keys: str) -> None:
    for k in keys:
        v = d[k]
        if isinstance(v, bool) or not isinstance(v, int):
            raise config_error(cfg, ConfigError(k, f"expected an integer, got {v!r}"))


def _need_real(cfg: LoadedConfig, d: dict, *keys: str) -> None:
    for k in keys:
        v = d[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise config_error(cfg, ConfigError(k, f"expected a number, got {v!r}"))


def _context(cfg: LoadedConfig, p: Any) -> FieldContext:
    try:
        return FieldContext(p)
    except (TypeError, ValueError) as exc:
        raise config_error(cfg, ConfigError("p", str(exc))) from None


# ---------------------------------------------------------------- output


def csv_bytes(header, rows, trailer: dict) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    for k, v in trailer.items():
        text = v if isinstance(v, str) else json.dumps(v, separators=(",", ":"))
        buf.write(f"# {k}: {text}\n")
    return buf.getvalue().encode()


def json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2) + "\n").encode()


def write_output(data: bytes, out: str | None) -> None:
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(out).write_bytes(data)


# -------------------------------------------------------------- commands


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    d = resolve({"only": []}, cfg)
    resolved = {"seed": args.seed, "tolerance": args.tolerance, "only": list(d["only"])}
    results = run_checks(args.seed, args.tolerance, set(d["only"]) or None)
    ok = all(r.passed for r in results)
    if args.format == "json":
        data = json_bytes({
            "config": resolved,
            "results": [
                {"module": r.module, "invariant": r.name, "max_deviation": r.deviation,
                 "tolerance": r.tolerance, "status": "pass" if r.passed else "fail"}
                for r in results
            ],
            "all_passed": ok,
        })
    else:
        rows = [[r.module, r.name, fmt_float(r.deviation), fmt_float(r.tolerance),
                 "pass" if r.passed else "fail"] for r in results]
        data = csv_bytes(("module", "invariant", "max_deviation", "tolerance", "status"), rows,
                         {"config": resolved})
    write_output(data, args.out)
    for r in results:
        if not r.passed:
            log.error("FAIL %s/%s deviation %.3g > %.3g", r.module, r.name, r.deviation, r.tolerance)
    return EXIT_OK if ok else EXIT_FAIL


SPECTRUM_DEFAULTS = {"p": 3, "m": 1.0, "r_min": -5, "r_max": 5}


def spectrum_rows(p: int, m: float, r_min: int, r_max: int) -> list[tuple]:
    rows = []
    for r in itertools.product(range(r_min, r_max + 1), repeat=3):
        f = lambda_a_u(FrequencyMagnitude(p, tuple(1 - x for x in r)), m)
        rows.append((r, f.lam, f.a_plus, f.a_minus))
    rows.sort(key=lambda t: (t[1], t[0]))
    return rows


def cmd_spectrum(args) -> int:
    cfg = load_config(args.config)
    d = resolve(SPECTRUM_DEFAULTS, cfg)
    if args.r_max is not None:
        d["r_max"] = args.r_max
    _need_int(cfg, d, "p", "r_min", "r_max")
    _need_real(cfg, d, "m")
    _context(cfg, d["p"])
    if d["m"] < 0:
        raise config_error(cfg, ConfigError("m", "mass must be nonnegative"))
    if d["r_min"] > d["r_max"]:
        raise config_error(cfg, ConfigError("r_min", "r_min exceeds r_max"))
    d["m"] = float(d["m"])
    rows = spectrum_rows(d["p"], d["m"], d["r_min"], d["r_max"])
    if args.format == "json":
        data = json_bytes({
            "config": d,
            "rows": [{"r": list(r), "lambda": lam, "a_plus": ap, "a_minus": am}
                     for r, lam, ap, am in rows],
        })
    else:
        data = csv_bytes(("r1", "r2", "r3", "lambda", "a_plus", "a_minus"),
                         [[*r, fmt_float(lam), fmt_float(ap), fmt_float(am)] for r, lam, ap, am in rows],
                         {"config": d})
    write_output(data, args.out)
    return EXIT_OK if all(lam >= d["m"] for _, lam, _, _ in rows) else EXIT_FAIL


EXPAND_DEFAULTS = {"p": 3, "R0": 0, "dim": 1, "r_max": 4}


def cmd_expand(args) -> int:
    cfg = load_config(args.config)
    d = resolve(EXPAND_DEFAULTS, cfg)
    if args.r_max is not None:
        d["r_max"] = args.r_max
    _need_int(cfg, d, "p", "R0", "dim", "r_max")
    ctx = _context(cfg, d["p"])
    if d["dim"] not in (1, 3):
        raise config_error(cfg, ConfigError("dim", "must be 1 or 3"))
    try:
        ex = expand_ball_indicator(ctx, d["R0"], d["dim"], d["r_max"])
    except ValueError as exc:
        raise config_error(cfg, ConfigError("r_max", str(exc))) from None
    partial = format_fraction(ex.partial_norm2)
    tail = format_fraction(ex.truncation.tail_norm2)
    if args.format == "json":
        data = json_bytes({"config": d, "coefficients": ex.to_json(),
                           "partial_norm2": partial, "tail_norm2": tail})
    else:
        rows = []
        for idx, c in ex.coefficients.items():
            j = idx.to_json()
            flat = [j["r"], j["n"], j["j"]]
            if d["dim"] == 3:
                flat = [" ".join(str(x) for x in col) for col in flat]
            rows.append([*flat, fmt_float(c.real), fmt_float(c.imag)])
        data = csv_bytes(("r", "n", "j", "re", "im"), rows,
                         {"config": d, "partial_norm2": partial, "tail_norm2": tail})
    write_output(data, args.out)
    return EXIT_OK


def _default_evolve_state(ctx: FieldContext, m: float) -> list:
    idx = WaveletIndex3D.make(ctx, (0, 0, 0))
    return localized_plane_wave(idx, m, "pos").to_json()


def cmd_evolve(args) -> int:
    cfg = load_config(args.config)
    d = resolve({"p": 3, "m": 1.0, "times": [0.0, 1.0], "points": None, "state": None}, cfg)
    _need_int(cfg, d, "p")
    _need_real(cfg, d, "m")
    ctx = _context(cfg, d["p"])
    d["m"] = float(d["m"])
    if d["state"] is None:
        d["state"] = _default_evolve_state(ctx, d["m"])
    if d["points"] is None:
        z, one, inv = (str(x) for x in (ctx.scalar(0), ctx.scalar(1), ctx.pow(-1)))
        d["points"] = [[z, z, z], [one, z, z], [inv, z, z]]
    try:
        state = SpinorWaveletState.from_json(ctx, d["state"])
    except (KeyError, TypeError, ValueError) as exc:
        raise config_error(cfg, ConfigError("state", f"invalid state: {exc}")) from None
    try:
        points = [tuple(ctx.scalar(str(s)) for s in pt) for pt in d["points"]]
        if any(len(pt) != 3 for pt in points):
            raise ValueError("points need three coordinates")
    except (TypeError, ValueError) as exc:
        raise config_error(cfg, ConfigError("points", str(exc))) from None
    if not isinstance(d["times"], list) or not d["times"]:
        raise config_error(cfg, ConfigError("times", "expected a nonempty list"))
    for t in d["times"]:
        if isinstance(t, bool) or not isinstance(t, (int, float)):
            raise config_error(cfg, ConfigError("times", f"expected numbers, got {t!r}"))
    d["times"] = [float(t) for t in d["times"]]
    d["state"] = state.to_json()
    d["points"] = [[str(x) for x in pt] for pt in points]
    samples, tables = [], []
    for t in d["times"]:
        st = evolve(state, d["m"], t)
        tables.append({"t": t, "state": st.to_json()})
        for i, pt in enumerate(points):
            samples.append((t, i, evaluate(st, pt)))
    if args.format == "csv":
        rows = [[fmt_float(t), i, c, fmt_float(v[c].real), fmt_float(v[c].imag)]
                for t, i, v in samples for c in range(4)]
        data = csv_bytes(("t", "point", "component", "re", "im"), rows, {"config": d})
    else:
        data = json_bytes({
            "config": d,
            "samples": [{"t": t, "point": d["points"][i], "value": matrix_to_json(v)}
                        for t, i, v in samples],
            "coefficients": tables,
        })
    write_output(data, args.out)
    return EXIT_OK


def cmd_causality(args) -> int:
    cfg = load_config(args.config)
    try:
        conf = CausalityConfig.from_dict(cfg.data)
        conf = conf.with_overrides(r_max=args.r_max, mode=args.mode)
    except ConfigError as exc:
        raise config_error(cfg, exc) from None
    except TypeError as exc:
        raise UsageError(f"{cfg.path}: {exc}") from None
    rep = run_scan(conf)
    write_output(emit_report(rep, args.format), args.out)
    return EXIT_OK if rep.all_positive else EXIT_FAIL


COMMANDS: dict[str, tuple[Callable, str, str]] = {
    "verify": (cmd_verify, "run every invariant suite", "csv"),
    "spectrum": (cmd_spectrum, "tabulate λ, a+, a- over a lattice of scales", "csv"),
    "expand": (cmd_expand, "wavelet coefficients of a ball indicator", "csv"),
    "evolve": (cmd_evolve, "sample a free evolution at given points", "json"),
    "causality": (cmd_causality, "distant-ball transition probability scan", "csv"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="padic-dirac", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_, fmt) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt)
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
        sp.add_argument("--tolerance", type=float, default=None, help="override every tolerance")
        sp.add_argument("--r-max", dest="r_max", type=int, default=None, help="override r_max")
        sp.add_argument("--mode", choices=("unitary_exact", "paper_literal"), default=None)
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    fn = COMMANDS[args.command][0]
    try:
        return fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
