"""Command-line entry point: ``qmixcert <subcommand> ...``.

Output files are the contract; stdout carries a short human-readable summary.
Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import certify, channels, doeblin, lindblad, order

log = logging.getLogger("qmixcert")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class InputError(Exception):
    """Bad command-line input; maps to exit code 2."""


def fmt6(x: float) -> str:
    if abs(x) < 5e-7:
        x = 0.0
    return f"{x:.6f}"


def write_csv(path: str, header: list[str], rows: list[list[float]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt6(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def write_json(path: str, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8", newline="")


def _float_list(text: str, what: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise InputError(f"{what}: list is empty")
    return values


def _json_number(x: float):
    return "inf" if math.isinf(x) else x


# ------------------------------------------------------------- subcommands

def run_order_sweep(args) -> int:
    if args.gamma_steps < 1 or args.ab_steps < 1:
        raise InputError("grid sizes must be positive")
    psi0 = "random" if args.psi0 == "random" else None
    grid = order.default_gamma_grid(args.gamma_steps)
    rows = order.zz_order_sweep(grid, args.ab_steps, psi0, args.seed, args.workers)
    write_csv(args.out, ["gamma", "mean", "min", "max"],
              [[r.gamma, r.mean, r.min, r.max] for r in rows])
    means = [r.mean for r in rows]
    monotone = all(b >= a - 1e-12 for a, b in zip(means, means[1:]))
    print(f"order-sweep: {len(rows)} rows -> {args.out}; mean column nondecreasing: {monotone}")
    return EXIT_OK


def _parse_pairs(text: str) -> list[tuple[float, float]]:
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            p, q = (float(v) for v in chunk.split(":"))
        except ValueError:
            raise InputError(f"bad pair {chunk!r}; expected p:q") from None
        if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
            raise InputError(f"pair {chunk!r} outside [0, 1]")
        pairs.append((p, q))
    if not pairs:
        raise InputError("no (p, q) pairs given")
    return pairs


def run_doeblin_table(args) -> int:
    pairs = _parse_pairs(args.pairs)
    if args.dim < 1:
        raise InputError("dimension must be positive")
    seed = channels.diagonal_projection(args.dim)
    rows = []
    for p, q in pairs:
        res = doeblin.product_bound_check(channels.dephasing(p, args.dim),
                                          channels.dephasing(q, args.dim), seed, seed, args.tol)
        rows.append([p, q, res.delta_A, res.delta_B, res.delta_AB])
        print(f"p={p} q={q}: delta_A={res.delta_A:.6f} delta_B={res.delta_B:.6f} "
              f"delta_AB={res.delta_AB:.6f} product bound holds: {res.holds}")
    write_csv(args.out, ["p", "q", "delta_A", "delta_B", "delta_AB"], rows)
    return EXIT_OK


def _certificate_payload(cert: certify.MixingCertificate, args) -> dict:
    if args.dt is not None:
        certify.attach_rate(cert, args.dt)
    payload = cert.to_dict()
    if "gamma_hat" in payload:
        payload["gamma_hat"] = _json_number(payload["gamma_hat"])
    _add_step_bound(payload, cert.epsilon_hat, args)
    return payload


def _add_step_bound(payload: dict, eps: float, args) -> None:
    if eps == 0.0:
        payload["step_bound"] = "no-certificate"
    elif args.target is not None:
        payload["step_bound"] = certify.step_bound(eps, args.target, args.initial_distance)
    if args.target is not None:
        payload["target"] = args.target
        payload["initial_distance"] = args.initial_distance


def run_certify(args) -> int:
    if not 0.0 < args.alpha < 1.0:
        raise InputError("alpha must lie in (0, 1)")
    if args.dt is not None and args.dt <= 0:
        raise InputError("dt must be positive")
    if args.target is not None:
        if args.initial_distance is None:
            raise InputError("--target requires --initial-distance")
        if not 0.0 < args.target < args.initial_distance:
            raise InputError("need 0 < target < initial-distance")
    tables = []
    for path in args.counts:
        try:
            raw = Path(path).read_bytes()
            table = certify.parse_counts_csv(raw.decode("utf-8"))
        except (OSError, UnicodeDecodeError, ValueError) as exc:
            raise InputError(f"{path}: {exc}") from None
        tables.append((table, certify.sha256_hex(raw)))

    certs = [certify.epsilon_hat(t, args.alpha, digest) for t, digest in tables]
    if len(certs) == 1:
        payload = _certificate_payload(certs[0], args)
    else:
        comp = certify.composed_epsilon([c.epsilon_hat for c in certs])
        payload = {"components": [_certificate_payload(c, args) for c in certs],
                   "epsilon_comp": comp,
                   "alpha_total": min(1.0, args.alpha * len(certs))}
        if args.dt is not None:
            payload["gamma_comp"] = _json_number(certify.rate_from_epsilon(comp, args.dt))
            payload["dt"] = args.dt
        _add_step_bound(payload, comp, args)
    write_json(args.out, payload)
    eps = payload.get("epsilon_comp", payload.get("epsilon_hat"))
    print(f"certify: epsilon={eps:.6f} at alpha={args.alpha} -> {args.out}")
    return EXIT_OK


GENERATORS = {
    "depolarizing": lindblad.depolarizing_generator,
    "dephasing": lindblad.dephasing_generator,
    "amplitude-damping": lindblad.amplitude_damping_generator,
}


def run_lindblad_sweep(args) -> int:
    dts = _float_list(args.dts, "--dts")
    if any(dt <= 0 for dt in dts):
        raise InputError("every dt must be positive")
    if args.t <= max(dts):
        raise InputError("--t must exceed every dt")
    if args.kappa < 0:
        raise InputError("kappa must be nonnegative")
    G = GENERATORS[args.family](args.kappa)
    if args.seed_state == "maximally-mixed":
        seed = channels.replacement(np.eye(G.dim) / G.dim)
    else:
        try:
            seed = channels.replacement(lindblad.stationary_state(G))
        except ValueError as exc:
            raise InputError(f"{exc}; use --seed-state maximally-mixed") from None
    rows = lindblad.limit_sweep(G, seed, dts, args.t, args.mode)
    write_csv(args.out, ["dt", "epsilon", "gamma", "embed_error"],
              [[r.dt, r.epsilon, r.gamma, r.embed_error] for r in rows])
    errors = [r.embed_error for r in rows]
    if len(rows) > 1 and min(errors) > 1e-12:
        slope = lindblad.loglog_slope(dts, errors)
        print(f"lindblad-sweep: embed_error log-log slope {slope:.4f}")
    print(f"lindblad-sweep: {len(rows)} rows ({args.mode}) -> {args.out}")
    return EXIT_OK


def diamond_preset(name: str, p: float = 0.2, q: float = 0.5, gamma: float = math.pi / 4):
    """``(Phi_A, Phi_B, Psi, seed_A, seed_B)`` for a named two-qubit instance."""
    if name == "identity":
        D = channels.diagonal_projection(2)
        return channels.dephasing(p, 2), channels.dephasing(q, 2), channels.identity(4), D, D
    if name == "swap-rank-one":
        R = channels.replacement(np.diag([1.0, 0.0]))
        return R, R, channels.swap(2), R, R
    if name == "dephasing-zz":
        D = channels.diagonal_projection(2)
        return (channels.dephasing(p, 2), channels.dephasing(q, 2),
                channels.zz_coupling(gamma), D, D)
    raise InputError(f"unknown preset {name!r}")


def _complex_list(v) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v).reshape(-1)]


def run_diamond_check(args) -> int:
    if args.restarts < 1:
        raise InputError("--restarts must be at least 1")
    if not (0.0 <= args.p <= 1.0 and 0.0 <= args.q <= 1.0):
        raise InputError("p and q must lie in [0, 1]")
    phi_a, phi_b, psi, seed_a, seed_b = diamond_preset(args.preset, args.p, args.q, args.gamma)
    rep = doeblin.diamond_theorem_check(phi_a, phi_b, psi, seed_a, seed_b,
                                        args.restarts, args.seed)
    payload = {
        "preset": args.preset,
        "lower": rep.lower,
        "upper": rep.upper,
        "theorem_rhs": rep.theorem_rhs,
        "delta_A": rep.delta_A,
        "delta_B": rep.delta_B,
        "verdict": rep.verdict,
    }
    if rep.verdict == "violated":
        payload["witness"] = {
            "state": _complex_list(rep.witness),
            "layout": "system (x) ancilla, row-major, [re, im] pairs",
            "trace_norm": rep.witness_value,
        }
    write_json(args.out, payload)
    print(f"diamond-check[{args.preset}]: lower={rep.lower:.6g} upper={rep.upper:.6g} "
          f"rhs={rep.theorem_rhs:.6g} verdict={rep.verdict}")
    return EXIT_OK


def run_equality_scan(args) -> int:
    if args.thetas < 1:
        raise InputError("--thetas must be positive")
    if args.samples < 100:
        raise InputError("--samples must be at least 100")
    thetas = [k * (math.pi / 2) / (args.thetas + 1) for k in range(1, args.thetas + 1)]
    rows = []
    worst_gap = worst_angle = 0.0
    for theta in thetas:
        value, psi = order.equality_window_scan(theta, args.samples, args.seed)
        bound = 0.5 * abs(math.sin(2 * theta))
        angle = order.window_angular_distance(psi)
        worst_gap = max(worst_gap, abs(value - bound))
        worst_angle = max(worst_angle, angle)
        rows.append([theta, value, bound, angle])
    write_csv(args.out, ["theta", "max_value", "bound", "angular_error"], rows)
    print(f"equality-scan: max |value - bound| = {worst_gap:.2e}, "
          f"max angular error = {worst_angle:.2e} -> {args.out}")
    return EXIT_OK


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmixcert", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("order-sweep", help="order-effect proxy under partial ZZ coupling")
    p.add_argument("--gamma-steps", type=int, default=16)
    p.add_argument("--ab-steps", type=int, default=12)
    p.add_argument("--psi0", choices=["plusplus", "random"], default="plusplus")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_order_sweep)

    p = sub.add_parser("doeblin-table", help="product Doeblin bound for dephasing pairs")
    p.add_argument("--pairs", default="0.2:0.5,0.3:0.3,0.4:0.7")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--tol", type=float, default=doeblin.DEFAULT_TOL)
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_doeblin_table)

    p = sub.add_parser("certify", help="counts CSV to mixing certificate JSON")
    p.add_argument("--counts", action="append", required=True,
                   help="counts CSV; repeat for several components")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--dt", type=float)
    p.add_argument("--target", type=float)
    p.add_argument("--initial-distance", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_certify)

    p = sub.add_parser("lindblad-sweep", help="Doeblin rate and embedding error versus dt")
    p.add_argument("--family", choices=sorted(GENERATORS), default="depolarizing")
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--dts", default="0.2,0.1,0.05,0.025")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--mode", choices=["exact", "first-order"], default="first-order")
    p.add_argument("--seed-state", choices=["stationary", "maximally-mixed"], default="stationary")
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_lindblad_sweep)

    p = sub.add_parser("diamond-check", help="test the diamond-norm coupling inequality")
    p.add_argument("--preset", choices=["identity", "swap-rank-one", "dephasing-zz"],
                   default="identity")
    p.add_argument("--p", type=float, default=0.2)
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=math.pi / 4)
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_diamond_check)

    p = sub.add_parser("equality-scan", help="commutator bound attainment on Halmos blocks")
    p.add_argument("--thetas", type=int, default=100)
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_equality_scan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.debug("numerical failure", exc_info=True)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
