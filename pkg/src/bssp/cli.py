"""Command-line front-end: a thin client over the HTTP service.

Every invocation builds a request, sends it through the service layer
(in-process by default, or to a remote server given ``--server``) and
writes the JSON response.  Exit codes: 0 when the computation completed
and all asserted checks passed, 1 when a mathematical check failed,
2 for invalid input.  Identical invocations (including the seed) produce
byte-identical output.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import math
import os
import sys
from pathlib import Path

import httpx
from threadpoolctl import threadpool_limits

from . import __version__

POISSON_SHORTHAND_EPS = 1e-16
THREADS_ENV = "BSSP_THREADS"


class InputError(ValueError):
    """Invalid command-line input; exits with status 2."""


# --------------------------------------------------------------------------
# Argument parsing helpers
# --------------------------------------------------------------------------


def _load_json_arg(arg: str, what: str) -> dict:
    text = arg
    if not arg.lstrip().startswith("{"):
        path = Path(arg)
        if not path.exists():
            raise InputError(f"{what} {arg!r} is neither inline JSON nor an existing file")
        text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON for {what} at {exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InputError(f"{what} must be a JSON object")
    return data


def parse_measure_arg(arg: str) -> dict:
    """Measure from shorthand, inline JSON or a file path.

    Shorthands: "lebesgue" (unit a.c. mass), "atom0" (unit point mass at
    angle 0) and "poisson:R" (the Poisson kernel at radius R, stored as a
    trig density truncated at machine precision).
    """
    if arg == "lebesgue":
        return {"atoms": [], "density": {"kind": "trig", "coeffs": [[0, 1.0, 0.0]]}}
    if arg == "atom0":
        return {"atoms": [{"theta": 0.0, "mass": 1.0}], "density": None}
    if arg.startswith("poisson:"):
        try:
            r = float(arg.split(":", 1)[1])
        except ValueError as exc:
            raise InputError(f"bad Poisson shorthand {arg!r}") from exc
        if not 0.0 <= r < 1.0:
            raise InputError(f"Poisson radius must lie in [0, 1), got {r}")
        if r == 0.0:
            cutoff = 0
        else:
            cutoff = min(int(math.log(POISSON_SHORTHAND_EPS) / math.log(r)) + 1, 8192)
        coeffs = [[n, r ** abs(n), 0.0] for n in range(-cutoff, cutoff + 1)]
        return {"atoms": [], "density": {"kind": "trig", "coeffs": coeffs}}
    return _load_json_arg(arg, "measure")


def parse_poly_arg(arg: str) -> dict:
    """Trig polynomial from inline JSON or a file: {"coeffs": [[n, re, im], ...]}."""
    data = _load_json_arg(arg, "trig polynomial")
    if "coeffs" not in data:
        raise InputError("trig polynomial spec needs a 'coeffs' field")
    return {"coeffs": data["coeffs"]}


def parse_alpha_arg(arg: str, q: int, n_max: int | None) -> dict:
    """Sequence spec: "beta" / "white" shorthands or explicit JSON values."""
    if arg in ("beta", "white"):
        return {"kind": arg, "q": q, "n_max": n_max}
    data = _load_json_arg(arg, "alpha")
    values = data.get("values")
    if values is None:
        raise InputError("alpha spec needs a 'values' field of [re, im] pairs")
    return {"kind": "explicit", "q": q, "values": values}


def parse_tree_arg(arg: str) -> dict:
    return _load_json_arg(arg, "tree")


def parse_sequence_arg(arg: str) -> list[float]:
    if Path(arg).exists():
        arg = Path(arg).read_text()
    try:
        values = json.loads(arg)
    except json.JSONDecodeError:
        try:
            values = [float(x) for x in arg.split(",")]
        except ValueError as exc:
            raise InputError(f"sequence {arg!r} is neither JSON nor comma-separated floats") from exc
    if not isinstance(values, list):
        raise InputError("sequence must be a JSON array or comma-separated floats")
    return [float(v) for v in values]


def parse_pairs_arg(arg: str) -> list[list[int]]:
    pairs = []
    for chunk in arg.split(","):
        bits = chunk.split(":")
        if len(bits) != 2:
            raise InputError(f"pairs must look like 'i:j,i:j', got {arg!r}")
        pairs.append([int(bits[0]), int(bits[1])])
    return pairs


# --------------------------------------------------------------------------
# Transport
# --------------------------------------------------------------------------


def _post_in_process(path: str, payload: dict) -> tuple[int, dict]:
    from .service import create_app

    async def run() -> tuple[int, dict]:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://bssp.local") as client:
            response = await client.post(path, json=payload, timeout=None)
            return response.status_code, response.json()

    return asyncio.run(run())


def _post_remote(path: str, payload: dict, server: str) -> tuple[int, dict]:
    with httpx.Client(base_url=server, timeout=600.0) as client:
        response = client.post(path, json=payload)
        return response.status_code, response.json()


def post(path: str, payload: dict, server: str | None) -> tuple[int, dict]:
    if server:
        return _post_remote(path, payload, server)
    return _post_in_process(path, payload)


# --------------------------------------------------------------------------
# Output rendering
# --------------------------------------------------------------------------


def _flatten(data, prefix: str = "") -> list[tuple[str, str]]:
    rows: list[tuple[str, str]] = []
    if isinstance(data, dict):
        for key in sorted(data):
            rows.extend(_flatten(data[key], f"{prefix}{key}." if prefix else f"{key}."))
    elif isinstance(data, list) and data and isinstance(data[0], (dict, list)):
        rows.append((prefix.rstrip("."), json.dumps(data, sort_keys=True)))
    elif isinstance(data, list):
        rows.append((prefix.rstrip("."), ";".join(str(v) for v in data)))
    else:
        rows.append((prefix.rstrip("."), json.dumps(data)))
    return rows


def render_csv(data: dict) -> str:
    matrix = data.get("matrix") or data.get("gram")
    if matrix and "rows" in matrix:
        lines = []
        for row in matrix["rows"]:
            cells = []
            for re, im in row:
                cells.append(repr(float(re) + 0.0))
                cells.append(repr(float(im) + 0.0))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"
    if data.get("samples"):
        lines = [",".join(data["labels"])]
        for row in data["samples"]:
            lines.append(",".join(repr(float(v) + 0.0) for v in row))
        return "\n".join(lines) + "\n"
    if "oracle_values" in data and "depths" in data:
        # plot-ready depth/value table
        lines = ["depth,oracle_value,szego_value"]
        for depth, value in zip(data["depths"], data["oracle_values"]):
            lines.append(f"{depth},{value!r},{data['szego_value']!r}")
        return "\n".join(lines) + "\n"
    if "pair_stats" in data:
        lines = ["pair,estimate,ci99,theory,passed"]
        for stat in data["pair_stats"] + data.get("theta_stats", []):
            pair = "|".join(stat["pair"])
            theory = "" if stat["theory"] is None else repr(stat["theory"])
            passed = "" if stat["passed"] is None else str(stat["passed"]).lower()
            lines.append(f"{pair},{stat['estimate']!r},{stat['ci99']!r},{theory},{passed}")
        return "\n".join(lines) + "\n"
    lines = ["key,value"]
    for key, value in _flatten({k: v for k, v in data.items() if k != "provenance"}):
        lines.append(f"{key},{value}")
    return "\n".join(lines) + "\n"


def write_output(data: dict, fmt: str, out: str | None) -> None:
    if fmt == "csv":
        text = render_csv(data)
    else:
        text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# Subcommand handlers (each returns path + payload)
# --------------------------------------------------------------------------


def _parse_word(s: str) -> list[int]:
    """Vertex word: 'e' for the root, '12' digit string, or '1.2.11' for arity > 9."""
    if s in ("e", ""):
        return []
    try:
        if "." in s:
            return [int(d) for d in s.split(".")]
        return [int(d) for d in s]
    except ValueError as exc:
        raise InputError(f"bad vertex word {s!r}") from exc


def _handle_tree(args) -> tuple[str, dict]:
    if args.tree_cmd == "relation":
        return "/tree/relation", {"a": _parse_word(args.a), "b": _parse_word(args.b)}
    if args.tree_cmd == "truncate":
        return "/tree/truncate", {"q": args.q, "depth": args.depth}
    return "/tree/delta", {"tree": parse_tree_arg(args.tree), "n_max": args.n_max}


def _handle_szego(args) -> tuple[str, dict]:
    return "/szego", {"measure": parse_measure_arg(args.measure), "grid": args.grid}


def _handle_kernel(args) -> tuple[str, dict]:
    if args.kernel_cmd == "build":
        alpha = parse_alpha_arg(args.alpha, args.q, max(args.depth, 1))
        return "/kernel/build", {"alpha": alpha, "depth": args.depth, "check_psd": not args.no_psd}
    if args.kernel_cmd == "psd":
        return "/kernel/psd", {"matrix": _load_json_arg(args.matrix, "matrix"), "tol_rel": args.tol}
    if args.kernel_cmd == "cantor":
        return "/kernel/cantor", {"q": args.q, "depth": args.depth}
    return "/kernel/markov", {
        "k1": _load_json_arg(args.k1, "kernel"),
        "k2": _load_json_arg(args.k2, "kernel"),
        "shared": args.shared,
    }


def _handle_hpd(args) -> tuple[str, dict]:
    if args.hpd_cmd == "check":
        alpha = parse_alpha_arg(args.alpha, args.q, max(args.N, args.depth_oracle or 0))
        payload = {"alpha": alpha, "order": args.N}
        if args.depth_oracle is not None:
            payload["depth_oracle"] = args.depth_oracle
        return "/hpd/check", payload
    if args.hpd_cmd == "from-measure":
        return "/hpd/from-measure", {
            "measure": parse_measure_arg(args.measure),
            "q": args.q,
            "n_max": args.n_max,
        }
    return "/hpd/modulate", {
        "alpha": parse_alpha_arg(args.alpha, args.q, args.n_max),
        "measure": parse_measure_arg(args.measure),
    }


def _handle_simulate(args) -> tuple[str, dict]:
    pairs = parse_pairs_arg(args.pairs) if args.pairs else None
    if args.simulate_cmd == "xr":
        payload = {
            "q": args.q,
            "r": args.r,
            "depth": args.depth,
            "n_samples": args.n_samples,
            "seed": args.seed,
        }
        if args.tail is not None:
            payload["tail"] = args.tail
        if pairs:
            payload["pairs"] = pairs
        if args.theta_depth is not None:
            payload["theta_depth"] = args.theta_depth
        if args.samples:
            payload["return_samples"] = True
        return "/simulate/xr", payload
    payload = {"n_samples": args.n_samples, "seed": args.seed}
    if args.matrix:
        payload["matrix"] = _load_json_arg(args.matrix, "matrix")
    else:
        payload["alpha"] = parse_alpha_arg(args.alpha, args.q, max(args.depth or 1, 1))
        payload["depth"] = args.depth
    if pairs:
        payload["pairs"] = pairs
    if args.theta_depth is not None:
        payload["theta_depth"] = args.theta_depth
    if args.samples:
        payload["return_samples"] = True
    return "/simulate/kernel", payload


def _handle_predict(args) -> tuple[str, dict]:
    measure = parse_measure_arg(args.measure)
    if args.predict_cmd == "tq":
        depths = [int(d) for d in args.depths.split(",")] if args.depths else [1, 2, 3, 4, 6, 8]
        return "/predict/tq", {
            "measure": measure,
            "q": args.q,
            "depths": depths,
            "grid": args.grid,
            "method": args.method,
        }
    return "/predict/tq1", {"measure": measure, "q": args.q, "grid": args.grid}


def _handle_criterion(args) -> tuple[str, dict]:
    if args.criterion_cmd == "tq1":
        payload = {
            "measure": parse_measure_arg(args.measure),
            "q": args.q,
            "grid": args.grid,
            "tol": args.tol,
        }
        if args.oracle is not None:
            payload["oracle_n_max"] = args.oracle
        return "/criterion/tq1", payload
    if args.criterion_cmd == "two-level":
        payload = {"q": args.q}
        if args.a is not None and args.b is not None:
            payload.update({"a": args.a, "b": args.b})
        return "/criterion/two-level", payload
    if args.criterion_cmd == "poisson-log":
        return "/criterion/poisson-log", {
            "measure": parse_measure_arg(args.measure),
            "r": args.r,
            "grid": args.grid,
        }
    if args.criterion_cmd == "sup-norm":
        return "/criterion/sup-norm", {"g": parse_poly_arg(args.g), "q": args.q, "grid": args.grid}
    return "/criterion/fourier-bound", {
        "measure": parse_measure_arg(args.measure),
        "tree": parse_tree_arg(args.tree),
        "n_max": args.n_max,
    }


def _handle_hankel(args) -> tuple[str, dict]:
    if args.hankel_cmd == "verify":
        payload = {
            "which": args.which,
            "measure": parse_measure_arg(args.measure),
            "f": parse_poly_arg(args.f),
            "grid": args.grid,
            "n_sym": args.n_sym,
            "tol": args.tol,
        }
        if args.r is not None:
            payload["r"] = args.r
        if args.N is not None:
            payload["n_dilation"] = args.N
        if args.B0 is not None:
            payload["b0"] = parse_poly_arg(args.B0)
        return "/hankel/verify", payload
    if args.hankel_cmd == "bounded":
        return "/hankel/bounded", {"symbol": parse_poly_arg(args.symbol)}
    if args.hankel_cmd == "norm":
        payload = {"symbol": parse_poly_arg(args.symbol), "grid": args.grid}
        if args.n_trunc is not None:
            payload["n_trunc"] = args.n_trunc
        return "/hankel/norm", payload
    return "/hankel/hlp", {"a": parse_sequence_arg(args.a), "b": parse_sequence_arg(args.b)}


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=int, default=4096, help="quadrature/evaluation grid size")
    p.add_argument("--tol", type=float, default=1e-9, help="tolerance override")
    p.add_argument("--seed", type=int, default=0, help="random seed (simulation)")
    p.add_argument("--threads", type=int, default=None,
                   help=f"BLAS thread cap (default: ${THREADS_ENV} or all cores)")
    p.add_argument("--out", type=str, default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--server", type=str, default=None,
                   help="base URL of a running service (default: in-process)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bssp",
        description="Branching-type stationary processes: kernels, criteria, prediction, Hankel inequalities",
    )
    parser.add_argument("--version", action="version", version=f"bssp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    tree = sub.add_parser("tree", help="tree combinatorics")
    tree_sub = tree.add_subparsers(dest="tree_cmd", required=True)
    rel = tree_sub.add_parser("relation", help="compare two vertices")
    rel.add_argument("--a", required=True, help="word like 12 or e for the root")
    rel.add_argument("--b", required=True)
    trunc = tree_sub.add_parser("truncate", help="breadth-first truncation")
    trunc.add_argument("--q", type=int, required=True)
    trunc.add_argument("--depth", type=int, required=True)
    delta = tree_sub.add_parser("delta", help="max descendant counts")
    delta.add_argument("--tree", required=True, help="tree JSON (file or inline)")
    delta.add_argument("--n-max", dest="n_max", type=int, default=8)
    for p in (rel, trunc, delta):
        _add_common(p)
    tree.set_defaults(handler=_handle_tree)

    szego = sub.add_parser("szego", help="Szego geometric mean of a measure's density")
    szego.add_argument("--measure", required=True)
    _add_common(szego)
    szego.set_defaults(handler=_handle_szego)

    kernel = sub.add_parser("kernel", help="branching-Toeplitz kernels")
    kernel_sub = kernel.add_subparsers(dest="kernel_cmd", required=True)
    kb = kernel_sub.add_parser("build", help="build a kernel matrix and test it")
    kb.add_argument("--alpha", required=True, help="beta | white | JSON values")
    kb.add_argument("--q", type=int, required=True)
    kb.add_argument("--depth", type=int, required=True)
    kb.add_argument("--no-psd", action="store_true")
    kp = kernel_sub.add_parser("psd", help="eigenvalue PSD test of a matrix")
    kp.add_argument("--matrix", required=True)
    kc = kernel_sub.add_parser("cantor", help="boundary Gram factorization")
    kc.add_argument("--q", type=int, required=True)
    kc.add_argument("--depth", type=int, required=True)
    km = kernel_sub.add_parser("markov", help="glue two kernels along a shared point")
    km.add_argument("--k1", required=True)
    km.add_argument("--k2", required=True)
    km.add_argument("--shared", required=True)
    for p in (kb, kp, kc, km):
        _add_common(p)
    kernel.set_defaults(handler=_handle_kernel)

    hpd = sub.add_parser("hpd", help="hyper-positive definiteness checks")
    hpd_sub = hpd.add_subparsers(dest="hpd_cmd", required=True)
    hc = hpd_sub.add_parser("check", help="finite-order consistency check")
    hc.add_argument("--alpha", required=True)
    hc.add_argument("--q", type=int, required=True)
    hc.add_argument("--N", type=int, required=True, help="Toeplitz order")
    hc.add_argument("--depth-oracle", dest="depth_oracle", type=int, default=None)
    hf = hpd_sub.add_parser("from-measure", help="sequence of a spectral measure")
    hf.add_argument("--measure", required=True)
    hf.add_argument("--q", type=int, required=True)
    hf.add_argument("--n-max", dest="n_max", type=int, default=32)
    hm = hpd_sub.add_parser("modulate", help="coefficient-wise modulation")
    hm.add_argument("--alpha", required=True)
    hm.add_argument("--q", type=int, required=True)
    hm.add_argument("--n-max", dest="n_max", type=int, default=32)
    hm.add_argument("--measure", required=True)
    for p in (hc, hf, hm):
        _add_common(p)
    hpd.set_defaults(handler=_handle_hpd)

    simulate = sub.add_parser("simulate", help="Gaussian process sampling")
    simulate_sub = simulate.add_subparsers(dest="simulate_cmd", required=True)
    sx = simulate_sub.add_parser("xr", help="descendant-averaging construction")
    sx.add_argument("--q", type=int, required=True)
    sx.add_argument("--r", type=float, required=True)
    sx.add_argument("--depth", type=int, required=True)
    sx.add_argument("--tail", type=int, default=None)
    sx.add_argument("--n-samples", dest="n_samples", type=int, default=100_000)
    sx.add_argument("--pairs", default=None, help="vertex index pairs like 0:1,1:2")
    sx.add_argument("--theta-depth", dest="theta_depth", type=int, default=None)
    sx.add_argument("--samples", action="store_true", help="include the raw sample batch")
    sk = simulate_sub.add_parser("kernel", help="sample any PSD kernel")
    sk.add_argument("--alpha", default=None)
    sk.add_argument("--q", type=int, default=2)
    sk.add_argument("--depth", type=int, default=None)
    sk.add_argument("--matrix", default=None)
    sk.add_argument("--n-samples", dest="n_samples", type=int, default=100_000)
    sk.add_argument("--pairs", default=None)
    sk.add_argument("--theta-depth", dest="theta_depth", type=int, default=None)
    sk.add_argument("--samples", action="store_true", help="include the raw sample batch")
    for p in (sx, sk):
        _add_common(p)
    simulate.set_defaults(handler=_handle_simulate)

    predict = sub.add_parser("predict", help="prediction distances")
    predict_sub = predict.add_subparsers(dest="predict_cmd", required=True)
    pt = predict_sub.add_parser("tq", help="homogeneous-tree prediction")
    pt.add_argument("--measure", required=True, help="spectral measure of the sequence")
    pt.add_argument("--q", type=int, required=True)
    pt.add_argument("--depths", default=None, help="comma-separated depth schedule")
    pt.add_argument("--method", choices=("symmetric", "tree"), default="symmetric")
    ps = predict_sub.add_parser("tq1", help="star-tree prediction")
    ps.add_argument("--measure", required=True)
    ps.add_argument("--q", type=int, required=True)
    for p in (pt, ps):
        _add_common(p)
    predict.set_defaults(handler=_handle_predict)

    crit = sub.add_parser("criterion", help="spectral admissibility tests")
    crit_sub = crit.add_subparsers(dest="criterion_cmd", required=True)
    ct = crit_sub.add_parser("tq1", help="inverse-Jensen criterion")
    ct.add_argument("--measure", required=True)
    ct.add_argument("--q", type=int, required=True)
    ct.add_argument("--oracle", type=int, default=None, help="also sweep the block oracle to this order")
    cl = crit_sub.add_parser("two-level", help="two-level density interval")
    cl.add_argument("--q", type=int, required=True)
    cl.add_argument("--a", type=float, default=None)
    cl.add_argument("--b", type=float, default=None)
    cp = crit_sub.add_parser("poisson-log", help="log-integral lower bound for smoothed measures")
    cp.add_argument("--measure", required=True)
    cp.add_argument("--r", type=float, required=True)
    cs = crit_sub.add_parser("sup-norm", help="sufficient sup-norm condition")
    cs.add_argument("--g", required=True, help="real trig polynomial JSON")
    cs.add_argument("--q", type=int, required=True)
    cf = crit_sub.add_parser("fourier-bound", help="necessary Fourier bounds on a tree")
    cf.add_argument("--measure", required=True)
    cf.add_argument("--tree", required=True)
    cf.add_argument("--n-max", dest="n_max", type=int, default=8)
    for p in (ct, cl, cp, cs, cf):
        _add_common(p)
    crit.set_defaults(handler=_handle_criterion)

    hank = sub.add_parser("hankel", help="Hankel inequalities and boundedness")
    hank_sub = hank.add_subparsers(dest="hankel_cmd", required=True)
    hv = hank_sub.add_parser("verify", help="verify a two-weight inequality")
    hv.add_argument("--which", choices=("two-weight", "en", "smoothed"), required=True)
    hv.add_argument("--measure", required=True)
    hv.add_argument("--f", required=True, help="analytic test polynomial JSON")
    hv.add_argument("--r", type=float, default=None)
    hv.add_argument("--N", type=int, default=None, help="dilation order for the en inequality")
    hv.add_argument("--B0", default=None, help="window polynomial JSON for the en inequality")
    hv.add_argument("--n-sym", dest="n_sym", type=int, default=128)
    hb = hank_sub.add_parser("bounded", help="boundedness tri-state for a symbol")
    hb.add_argument("--symbol", required=True)
    hn = hank_sub.add_parser("norm", help="Hardy-to-sup operator norm")
    hn.add_argument("--symbol", required=True)
    hn.add_argument("--n-trunc", dest="n_trunc", type=int, default=None)
    hl = hank_sub.add_parser("hlp", help="Hilbert-type pairing bound")
    hl.add_argument("--a", required=True)
    hl.add_argument("--b", required=True)
    for p in (hv, hb, hn, hl):
        _add_common(p)
    hank.set_defaults(handler=_handle_hankel)

    return parser


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


def _thread_limit(args) -> int | None:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get(THREADS_ENV)
    return int(env) if env else None


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        path, payload = args.handler(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    limit = _thread_limit(args)
    try:
        if limit:
            with threadpool_limits(limits=limit):
                status, data = post(path, payload, args.server)
        else:
            status, data = post(path, payload, args.server)
    except httpx.HTTPError as exc:
        print(f"error: request failed: {exc}", file=sys.stderr)
        return 2
    if status >= 400:
        detail = data.get("detail", data)
        print(f"error: {json.dumps(detail, sort_keys=True, default=str)}", file=sys.stderr)
        return 2
    write_output(data, args.format, args.out)
    if data.get("passed") is False:
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
