"""Command-line front end; every command writes CSV.

Exit codes: 0 ok, 2 input error, 3 internal invariant violation, 4 no threshold found.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .divergence import fidelity, nqcd, trace_distance
from .protocol import attack_from_dict, attack_to_dict, load_json, save_json, simulate_blocks, state_from_dict
from .qmath import CapacityError, ValidationError, binary_entropy
from .scenarios import NoThresholdError, find_threshold, honest_behavior, isotropic_attack
from .security import K_CAP, delta_k, eve_entropy, evaluate_conditions

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT, EXIT_NO_THRESHOLD = 0, 2, 3, 4
BOUND_ALIASES = {"exact": "exact_attack", "sdp": "di_sdp", "exact_attack": "exact_attack", "di_sdp": "di_sdp"}

DEFAULTS = {
    "case": 1, "q": 0.05, "k": f"1-{K_CAP}", "level": 2, "blocks": 100000, "seed": 0,
    "condition": "suffQ", "bound": "exact", "eps": 0.1, "variant": "standard",
    "tol": 1e-4, "grid": None, "theta": None, "workers": 1, "out": None,
}


class InvariantViolation(RuntimeError):
    pass


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _config_hash(params: dict) -> str:
    # where the output goes does not change what is computed
    payload = json.dumps({k: v for k, v in params.items() if k != "out"}, sort_keys=True, default=str).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def _emit(params: dict, header: list, rows: list, out) -> str:
    buf = io.StringIO()
    buf.write(f"# chernoffqkd {__version__} config={_config_hash(params)} seed={params.get('seed', 0)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def parse_k_range(spec) -> list[int]:
    s = str(spec)
    try:
        if "-" in s:
            lo, hi = (int(x) for x in s.split("-", 1))
            ks = list(range(lo, hi + 1))
        else:
            ks = [int(x) for x in s.split(",")]
    except ValueError as exc:
        raise ValidationError(f"bad block-size range {spec!r}") from exc
    if not ks or min(ks) < 1:
        raise ValidationError(f"block sizes must be positive, got {spec!r}")
    return ks


def cmd_measures(params: dict) -> list:
    r = state_from_dict(load_json(params["state1"]))
    s = state_from_dict(load_json(params["state2"]))
    if r.order != s.order:
        raise ValidationError(f"states have different dimensions ({r.order} vs {s.order})")
    d, f, res = trace_distance(r, s), fidelity(r, s), nqcd(r, s)
    q = res.value
    if not (f * f - 1e-8 <= q <= f + 1e-8 and q >= 1 - d - 1e-8):
        raise InvariantViolation(f"measures violate F^2 <= Q <= F, Q >= 1 - d: d={d}, F={f}, Q={q}")
    return _emit(params, ["d", "F", "Q", "s_star"], [[d, f, q, res.s_star]], params["out"])


def cmd_analyze(params: dict) -> str:
    a = attack_from_dict(load_json(params["attack"]))
    ks = parse_k_range(params["k"])
    v = evaluate_conditions(a)
    rows = []
    first_positive = None
    for k in ks:
        try:
            h_eve = eve_entropy(a, k)
        except CapacityError as exc:
            rows.append(["warning", f"truncated at k={k}: {exc}", "", "", "", "", "", ""])
            break
        dk = delta_k(a.eps, k)
        hb = binary_entropy(dk)
        margin = h_eve - hb
        if margin > 0 and first_positive is None:
            first_positive = k
        rows.append([k, dk, hb, h_eve, margin, margin > 0, v.thm1_sufficient, v.thm2_insecure])
    if v.thm1_sufficient:
        verdict = "secure for large k (Thm 1)"
    elif v.thm2_insecure:
        verdict = "insecure (Thm 2)"
    else:
        verdict = "undecided"
    k_note = f"k_positive={first_positive} (empirical, not certified)" if first_positive else "k_positive=none"
    rows.append(["verdict", verdict, f"Q={v.q_value:.10g}", f"beta={v.beta:.10g}", k_note, "", "", ""])
    header = ["k", "delta_k", "h_delta_k", "H_C_given_ETM", "margin", "margin_positive",
              "thm1_sufficient", "thm2_insecure"]
    return _emit(params, header, rows, params["out"])


def cmd_threshold(params: dict) -> str:
    bound = BOUND_ALIASES.get(params["bound"])
    if bound is None:
        raise ValidationError(f"unknown bound source {params['bound']!r}")
    q_star = find_threshold(params["condition"], int(params["case"]), bound, tol_q=float(params["tol"]),
                            level=int(params["level"]), theta=params["theta"],
                            workers=int(params["workers"]))
    level = params["level"] if bound == "di_sdp" else ""
    return _emit(params, ["case", "condition", "bound", "level", "q_star"],
                 [[params["case"], params["condition"], bound, level, q_star]], params["out"])


def cmd_simulate(params: dict) -> str:
    rows = []
    for k in parse_k_range(params["k"]):
        st = simulate_blocks(float(params["eps"]), k, int(params["blocks"]), params["variant"], int(params["seed"]))
        rows.append([params["variant"], params["eps"], k, st.blocks_run, st.blocks_accepted,
                     st.accept_rate, st.mismatch_rate_given_accept])
    return _emit(params, ["variant", "eps", "k", "blocks", "accepted", "accept_rate", "mismatch_rate"],
                 rows, params["out"])


def cmd_dibound(params: dict) -> str:
    from .dibound import build_guessing_sdp, solve_sdp
    from .protocol import qber

    b = honest_behavior(int(params["case"]), float(params["q"]), params["theta"])
    eps = qber(b)
    sol = solve_sdp(build_guessing_sdp(b, int(params["level"])))
    pg = min(1.0, sol.optimum / (1 - eps))
    d = min(1.0, max(0.0, 2 * pg - 1))
    return _emit(params, ["case", "q", "eps", "level", "P_guess", "d_bound", "status", "gap"],
                 [[params["case"], params["q"], eps, params["level"], pg, d, sol.status, sol.duality_gap]],
                 params["out"])


def cmd_attack(params: dict) -> str:
    a = isotropic_attack(int(params["case"]), float(params["q"]), params["theta"])
    doc = attack_to_dict(a)
    if params["out"]:
        save_json(doc, params["out"])
    else:
        sys.stdout.write(json.dumps(doc, indent=1) + "\n")
    return ""


def cmd_scan(params: dict) -> str:
    import numpy as np

    from .scenarios import margin_function

    bound = BOUND_ALIASES.get(params["bound"])
    if bound is None:
        raise ValidationError(f"unknown bound source {params['bound']!r}")
    grid = params["grid"] or [float(x) for x in np.linspace(0, 0.5, 21)]
    margin = margin_function(params["condition"], int(params["case"]), bound, int(params["level"]), params["theta"])
    rows = [[params["case"], params["condition"], bound, float(q), margin(float(q))] for q in grid]
    return _emit(params, ["case", "condition", "bound", "q", "margin"], rows, params["out"])


COMMANDS = {
    "measures": cmd_measures, "analyze": cmd_analyze, "threshold": cmd_threshold,
    "simulate": cmd_simulate, "dibound": cmd_dibound, "attack": cmd_attack, "scan": cmd_scan,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with the same keys as the flags")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--seed", type=int)
    common.add_argument("--case", type=int, choices=(1, 2, 3))
    common.add_argument("--q", type=float, help="depolarizing noise")
    common.add_argument("--k", help="block sizes: '3', '1-5' or '1,2,4'")
    common.add_argument("--level", type=int, choices=(1, 2, 3), help="moment hierarchy level")
    common.add_argument("--blocks", type=int)
    common.add_argument("--condition", choices=("suffQ", "neccQ", "suffF", "neccF", "suffD"))
    common.add_argument("--bound", choices=("exact", "sdp"))
    common.add_argument("--eps", type=float, help="QBER for the simulator")
    common.add_argument("--variant", choices=("standard", "modified"))
    common.add_argument("--tol", type=float, help="bisection width in q")
    common.add_argument("--theta", type=float, help="case-1 measurement angle (default pi/4)")
    common.add_argument("--workers", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="chernoffqkd", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    m = sub.add_parser("measures", parents=[common], help="d, F, Q between two state files")
    m.add_argument("state1")
    m.add_argument("state2")
    a = sub.add_parser("analyze", parents=[common], help="exact key-rate margin per block size")
    a.add_argument("attack")
    sub.add_parser("threshold", parents=[common], help="bisect the noise threshold of a condition")
    sub.add_parser("simulate", parents=[common], help="Monte-Carlo block statistics")
    sub.add_parser("dibound", parents=[common], help="DI bound on guessing probability at one q")
    sub.add_parser("attack", parents=[common], help="write the isotropic attack for a scenario")
    sub.add_parser("scan", parents=[common], help="condition margin over a q grid")
    return p


def resolve_params(ns: argparse.Namespace) -> dict:
    params = dict(DEFAULTS)
    if ns.config:
        cfg = load_json(ns.config)
        if not isinstance(cfg, dict):
            raise ValidationError("config must be a JSON object")
        unknown = set(cfg) - set(DEFAULTS) - {"state1", "state2", "attack"}
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        params.update(cfg)
    for key, val in vars(ns).items():
        if key in ("config", "verbose") or val is None:
            continue
        params[key] = val
    _validate(params)
    return params


def _validate(params: dict):
    if not 0.0 <= float(params["q"]) <= 0.5:
        raise ValidationError(f"--q must lie in [0, 0.5], got {params['q']}")
    if not 0.0 <= float(params["eps"]) <= 0.5:
        raise ValidationError(f"--eps must lie in [0, 0.5], got {params['eps']}")
    if int(params["blocks"]) < 1:
        raise ValidationError("--blocks must be positive")
    if not 0 < float(params["tol"]) < 0.5:
        raise ValidationError("--tol must lie in (0, 0.5)")
    if int(params["case"]) not in (1, 2, 3):
        raise ValidationError("--case must be 1, 2 or 3")
    if int(params["level"]) not in (1, 2, 3):
        raise ValidationError("--level must be 1, 2 or 3")
    parse_k_range(params["k"])


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        params = resolve_params(ns)
        COMMANDS[ns.command](params)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except NoThresholdError as exc:
        print(f"no threshold: {exc}", file=sys.stderr)
        return EXIT_NO_THRESHOLD
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
