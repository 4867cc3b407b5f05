"""Command-line front end.

Subcommands: ``max-eig`` (maximum H-eigenvalue of a tensor or generated
instance), ``copositive`` (extended Z-tensor copositivity verdict with exit
codes 0 copositive / 2 not copositive / 3 not extended Z), ``gen`` (write
benchmark instances to disk), ``table`` (desk-scale sweep reports).

Outputs are byte-stable for identical flags and seeds, except for the
wall-clock timing fields inside report files.  ``WTENSOR_THREADS`` caps the
parallelism of table sweeps.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import baselines, copositivity, hypergraph, instances, sos
from .errors import WTensorError
from .tensor import SymmetricTensor, load_tensor, save_tensor, tensor_to_json
from .wstructure import WDecomposition, decomposition_from_json, detect


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("WTENSOR_THREADS", "1")))
    except ValueError:
        return 1


def _digest_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _digest_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _parse_gen_spec(spec: str):
    """``kind:key=value,...`` instance descriptions for --gen."""
    kind, _, rest = spec.partition(":")
    params: dict[str, float] = {}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            params[key.strip()] = float(val)
    return kind.strip().lower(), params


def _instance_from_gen(kind: str, params: dict, variant: str):
    """Build (tensor, decomposition-or-None, hypergraph-or-None)."""
    ip = {k: int(v) for k, v in params.items() if k != "M"}
    if kind == "example31":
        n = ip["n"]
        return instances.example31_tensor(n), instances.example31_decomposition(n), None
    if kind == "identity":
        return SymmetricTensor.identity(ip["m"], ip["n"]), None, None
    if kind in ("hyperstar", "hyperpath", "hypertree"):
        if kind == "hyperstar":
            g = hypergraph.gen_hyper_star(ip["m"], ip["k"])
        elif kind == "hyperpath":
            g = hypergraph.gen_hyper_path(ip["m"], ip["k"])
        else:
            raise WTensorError("hypertree generation needs --edges; use the gen subcommand")
        if variant == "adjacency":
            return hypergraph.adjacency_tensor(g), None, g
        if variant == "signless":
            return hypergraph.signless_laplacian(g), None, g
        return hypergraph.laplacian(g), hypergraph.laplacian_w_decomposition(g), g
    if kind == "randomz":
        t = copositivity.gen_random_extended_z(
            ip["m"], ip["n"], ip["s"], ip["k"], params.get("M", 1.0), ip.get("seed", 0))
        return t, None, None
    raise WTensorError(f"unknown generator kind {kind!r}")


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


# ----------------------------------------------------------------------
# max-eig
# ----------------------------------------------------------------------

def cmd_max_eig(args) -> int:
    t_all = time.perf_counter()
    deco = None
    if args.input:
        tensor = load_tensor(args.input)
        digest = _digest_file(args.input)
        graph = None
    elif args.gen:
        kind, params = _parse_gen_spec(args.gen)
        variant = ("adjacency" if args.adjacency else
                   "signless" if args.signless else "laplacian")
        tensor, deco, graph = _instance_from_gen(kind, params, variant)
        digest = _digest_text(f"{args.gen}|{variant}")
    else:
        print("max-eig: one of --input or --gen is required", file=sys.stderr)
        return 1

    if args.decomposition:
        with open(args.decomposition) as fh:
            deco = decomposition_from_json(json.load(fh), tensor)

    method = args.method.replace("-", "_")
    report = {
        "command": "max-eig " + (args.input or args.gen),
        "input_digest": digest,
        "method": method,
        "tol": args.tol,
    }

    if method == "nqz":
        res = baselines.nqz(tensor, tol=args.tol, max_iter=args.max_iter)
        lam = res.lam
        report.update(lam=lam, bracket=[res.lower, res.upper],
                      iterations=res.iterations, converged=res.converged)
    elif method == "ascent":
        res = baselines.projected_ascent(tensor, starts=args.starts, seed=args.seed)
        lam = res.lam
        report.update(lam=lam, starts=res.starts, bound="lower")
    else:
        eig = sos.max_h_eigenvalue(tensor, method=method, tol=args.tol,
                                   decomposition=deco)
        lam = eig.lam
        report.update(
            lam=lam, status=eig.status, iterations=eig.iterations,
            residuals=eig.residuals, timings=eig.timings,
            certificate_verified=bool(eig.verification.passed),
        )
        if not eig.verification.passed:
            print("max-eig: certificate failed verification", file=sys.stderr)
            return 1
        if args.certificate:
            _write_json(args.certificate, sos.certificate_to_json(eig.certificate))
            report["certificate_path"] = args.certificate

    report["wall_seconds"] = time.perf_counter() - t_all
    print(f"lambda = {lam:.6f}")
    if args.report:
        _write_json(args.report, report)
    return 0


# ----------------------------------------------------------------------
# copositive
# ----------------------------------------------------------------------

def cmd_copositive(args) -> int:
    tensor = load_tensor(args.input)
    verdict = copositivity.is_copositive(tensor, tol=args.tol)
    doc = {
        "command": f"copositive {args.input}",
        "input_digest": _digest_file(args.input),
        "verdict": verdict.verdict,
        "bound": verdict.bound,
        "borderline": verdict.borderline,
    }
    if verdict.eig is not None and args.certificate:
        _write_json(args.certificate, sos.certificate_to_json(verdict.eig.certificate))
        doc["certificate_path"] = args.certificate
    if verdict.witness is not None:
        doc["witness"] = [float(v) for v in verdict.witness]
    if args.report:
        _write_json(args.report, doc)
    print(f"verdict = {verdict.verdict}"
          + (f" (bound {verdict.bound:.6e})" if verdict.bound is not None else ""))
    return {"copositive": 0, "not_copositive": 2, "not_extended_z": 3}[verdict.verdict]


# ----------------------------------------------------------------------
# gen
# ----------------------------------------------------------------------

def cmd_gen(args) -> int:
    kind = args.kind
    base, ext = os.path.splitext(args.out)
    if kind in ("hyperstar", "hyperpath", "hypertree"):
        if kind == "hyperstar":
            g = hypergraph.gen_hyper_star(args.m, args.k)
        elif kind == "hyperpath":
            g = hypergraph.gen_hyper_path(args.m, args.k)
        else:
            if not args.edges:
                print("gen hypertree: --edges 'a-b c-d ...' is required", file=sys.stderr)
                return 1
            pairs = [tuple(int(v) for v in e.split("-")) for e in args.edges.split()]
            g = hypergraph.gen_hyper_tree(pairs, args.m)
        edge_path = args.out if ext == ".edges" else base + ".edges"
        hypergraph.save_edge_list(g, edge_path)
        tensor = (hypergraph.adjacency_tensor(g) if args.adjacency
                  else hypergraph.signless_laplacian(g) if args.signless
                  else hypergraph.laplacian(g))
        json_path = args.out if ext == ".json" else base + ".json"
        save_tensor(tensor, json_path)
        print(f"wrote {edge_path} and {json_path} (n={g.n}, edges={len(g.edges)})")
        return 0
    if kind == "example31":
        tensor = instances.example31_tensor(args.n)
    elif kind == "identity":
        tensor = SymmetricTensor.identity(args.m, args.n)
    elif kind == "randomz":
        tensor = copositivity.gen_random_extended_z(
            args.m, args.n, args.s, args.k, args.M, args.seed)
    else:
        print(f"gen: unknown kind {kind!r}", file=sys.stderr)
        return 1
    json_path = args.out if ext == ".json" else base + ".json"
    save_tensor(tensor, json_path)
    print(f"wrote {json_path} (order={tensor.order}, dim={tensor.dim}, nnz={tensor.nnz})")
    return 0


# ----------------------------------------------------------------------
# table
# ----------------------------------------------------------------------

def _emit_table(header, rows, out, csv_path):
    widths = [max(len(str(h)), max((len(str(r[i])) for r in rows), default=0))
              for i, h in enumerate(header)]
    lines = ["  ".join(str(h).rjust(w) for h, w in zip(header, widths))]
    for r in rows:
        lines.append("  ".join(str(v).rjust(w) for v, w in zip(r, widths)))
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if csv_path:
        with open(csv_path, "w") as fh:
            fh.write(",".join(map(str, header)) + "\n")
            for r in rows:
                fh.write(",".join(map(str, r)) + "\n")


def cmd_table(args) -> int:
    rows = []
    if args.which == 1:
        header = ("n", "true", "estimated", "error", "iters", "seconds")
        for n in (8, 16, 64, 200, 500):
            if n > args.max_n:
                continue
            t0 = time.perf_counter()
            eig = sos.max_h_eigenvalue(instances.example31_decomposition(n),
                                       method="block", tol=args.tol)
            rows.append((n, n + 1, f"{eig.lam:.6f}", f"{abs(eig.lam - n - 1):.1e}",
                         eig.iterations, f"{time.perf_counter() - t0:.2f}"))
    elif args.which == 2:
        header = ("m", "k", "n", "true", "estimated", "error", "seconds")
        for k in (2, 5, 10, 100):
            if k > args.max_k:
                continue
            g = hypergraph.gen_hyper_star(4, k)
            true = baselines.hyper_star_lambda(4, k)
            t0 = time.perf_counter()
            eig = sos.max_h_eigenvalue(hypergraph.laplacian_w_decomposition(g),
                                       method="block", tol=args.tol)
            rows.append((4, k, g.n, f"{true:.4f}", f"{eig.lam:.4f}",
                         f"{abs(eig.lam - true):.1e}", f"{time.perf_counter() - t0:.2f}"))
    elif args.which == 3:
        header = ("m", "k", "n", "lambda_L", "sdp_seconds", "lambda_Q_nqz", "nqz_seconds")
        cases = [(4, 10), (4, 100), (6, 10)]
        for m, k in cases:
            if k > args.max_k:
                continue
            g = hypergraph.gen_hyper_path(m, k)
            t0 = time.perf_counter()
            eig = sos.max_h_eigenvalue(hypergraph.laplacian_w_decomposition(g),
                                       method="block", tol=args.tol)
            t_sdp = time.perf_counter() - t0
            t0 = time.perf_counter()
            nr = baselines.nqz(hypergraph.signless_laplacian(g), tol=1e-9,
                               max_iter=200000)
            rows.append((m, k, g.n, f"{eig.lam:.4f}", f"{t_sdp:.2f}",
                         f"{nr.lam:.4f}", f"{time.perf_counter() - t0:.2f}"))
    else:
        header = ("M", "trials", "copositive", "fraction")
        grid = [float(v) for v in args.m_grid.split(",")]

        def one(mval, trial):
            t = copositivity.gen_random_extended_z(
                args.m, args.s * args.k, args.s, args.k, mval,
                seed=args.seed + trial)
            return copositivity.is_copositive(t).copositive

        for mval in grid:
            with ThreadPoolExecutor(max_workers=_threads()) as pool:
                futures = [pool.submit(one, mval, t) for t in range(args.trials)]
                hits = sum(f.result() for f in futures)
            rows.append((mval, args.trials, hits, f"{hits / args.trials:.3f}"))
    _emit_table(header, rows, args.out, args.csv)
    return 0


# ----------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wtensor",
        description="Maximum H-eigenvalues of structured symmetric tensors "
                    "via block sums-of-squares programs, plus copositivity tests.",
    )
    subs = parser.add_subparsers(dest="cmd", required=True)

    pe = subs.add_parser("max-eig", help="maximum H-eigenvalue")
    pe.add_argument("--input", help="tensor JSON file")
    pe.add_argument("--gen", help="instance spec, e.g. example31:n=16 or hyperstar:m=4,k=10")
    pe.add_argument("--adjacency", action="store_true")
    pe.add_argument("--signless", action="store_true")
    pe.add_argument("--laplacian", action="store_true", help="default for hypergraphs")
    pe.add_argument("--method", default="auto",
                    choices=["auto", "full", "block", "closed-form", "nqz", "ascent"])
    pe.add_argument("--tol", type=float, default=1e-8)
    pe.add_argument("--max-iter", type=int, default=100000)
    pe.add_argument("--starts", type=int, default=50)
    pe.add_argument("--seed", type=int, default=42)
    pe.add_argument("--decomposition", help="block decomposition JSON")
    pe.add_argument("--certificate", help="write the certificate JSON here")
    pe.add_argument("--report", help="write the run report JSON here")
    pe.set_defaults(func=cmd_max_eig)

    pc = subs.add_parser("copositive", help="extended Z-tensor copositivity verdict")
    pc.add_argument("--input", required=True)
    pc.add_argument("--tol", type=float, default=1e-8)
    pc.add_argument("--certificate")
    pc.add_argument("--report")
    pc.set_defaults(func=cmd_copositive)

    pg = subs.add_parser("gen", help="write benchmark instances")
    pg.add_argument("kind", choices=["hyperstar", "hyperpath", "hypertree",
                                     "example31", "randomz", "identity"])
    pg.add_argument("--m", type=int, default=4)
    pg.add_argument("--k", type=int, default=2)
    pg.add_argument("--n", type=int, default=8)
    pg.add_argument("--s", type=int, default=2)
    pg.add_argument("--M", type=float, default=1.0)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--edges", help="hypertree base edges, e.g. '1-4 4-7'")
    pg.add_argument("--adjacency", action="store_true")
    pg.add_argument("--signless", action="store_true")
    pg.add_argument("--out", required=True)
    pg.set_defaults(func=cmd_gen)

    pt = subs.add_parser("table", help="desk-scale sweep reports")
    pt.add_argument("which", type=int, choices=[1, 2, 3, 4])
    pt.add_argument("--max-n", type=int, default=200)
    pt.add_argument("--max-k", type=int, default=10)
    pt.add_argument("--tol", type=float, default=1e-8)
    pt.add_argument("--m", type=int, default=3)
    pt.add_argument("--s", type=int, default=10)
    pt.add_argument("--k", type=int, default=5)
    pt.add_argument("--trials", type=int, default=40)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--m-grid", default="6,9,12,15")
    pt.add_argument("--out")
    pt.add_argument("--csv")
    pt.set_defaults(func=cmd_table)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WTensorError as exc:
        print(f"{parser.prog}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{parser.prog}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
