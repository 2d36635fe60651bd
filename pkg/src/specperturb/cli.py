"""Command-line entry point.

Exit status: 0 on success, 1 for usage or input errors, 2 for numerical
failures (a bound that fails under ``--strict``, a collapsed eigengap,
non-convergence under ``--strict``).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__, _backend
from .affinity import DataMatrix, affinity, normalize_affinity, resolve_sigma
from .bounds import check_cs_affinity, check_embedding, check_mc_affinity, check_sin_theta, check_stewart
from .completion import PartialMatrix, sample_mask, soft_impute
from .embedding import KMEANS_RESTARTS, cluster_embedding, misclassification_rate, spectral_embed
from .experiments import (CloudSetup, CombinedSetup, LowRankSetup, sweep_embedding_error,
                          sweep_fraction, sweep_measurements, sweep_rank)
from .fileio import (InputError, atomic_write_text, read_labels_csv, read_mask_csv,
                     read_matrix_csv, report_document, write_json, write_labels_csv,
                     write_mask_csv, write_matrix_csv)
from .numkernel import SeededRng
from .sensing import MeasurementOperator, empirical_rip_delta, measure
from .subspace import compare
from .synthgen import (BlockAffinitySpec, LowRankSpec, SparseCloudSpec, block_affinity,
                       lowrank_images, sparse_cloud)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# argument types --------------------------------------------------------------

def _sigma(text):
    if text == "median":
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"sigma must be 'median' or a positive number, got {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"sigma must be positive, got {text}")
    return v


def _int_list(text):
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def parse_range(text: str, kind=float) -> list:
    """``a,b,c`` | ``a..b`` | ``a..b:step`` | ``a..b*factor`` (bounds inclusive)."""
    try:
        if ".." not in text:
            out = [kind(x) for x in text.split(",") if x.strip()]
        else:
            lo, rest = text.split("..", 1)
            if "*" in rest:
                hi, factor = rest.split("*", 1)
                lo, hi, factor = kind(lo), kind(hi), float(factor)
                if factor <= 1:
                    raise ValueError("factor must exceed 1")
                out, v = [], lo
                while v <= hi * (1 + 1e-12):
                    out.append(kind(v))
                    v = v * factor
            else:
                hi, _, step = rest.partition(":")
                lo, hi = kind(lo), kind(hi)
                step = kind(step) if step else kind(1)
                if step <= 0:
                    raise ValueError("step must be positive")
                n = int(round((hi - lo) / step + 1e-9)) + 1
                out = [kind(lo + i * step) for i in range(max(n, 0))]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad range {text!r}: {exc}") from None
    if not out:
        raise argparse.ArgumentTypeError(f"range {text!r} is empty")
    return out


def _shape(text):
    vals = _int_list(text)
    if len(vals) != 2 or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"shape must be N,n with positive entries, got {text!r}")
    return tuple(vals)


def _prob(text):
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1], got {text}")
    return v


# manifests ---------------------------------------------------------------------

def manifest_for(args) -> dict:
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
              if k != "func"}
    return {"tool": "specperturb", "version": __version__, "backend": _backend.BACKEND,
            "config": config}


def _manifest_path(out: Path, is_dir: bool) -> Path:
    return out / "manifest.json" if is_dir else out.with_name(out.name + ".manifest.json")


def _write_manifest(args, out: Path, is_dir: bool = False, extra: Optional[dict] = None):
    m = manifest_for(args)
    if extra:
        m.update(extra)
    write_json(_manifest_path(out, is_dir), m)
    return m


# loading -----------------------------------------------------------------------

def _load_data(path, labels_path=None) -> DataMatrix:
    X = read_matrix_csv(path)
    labels = read_labels_csv(labels_path, X.shape[0]) if labels_path else None
    try:
        return DataMatrix(X, labels=labels)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_affinity(path, kind: str, sigma):
    """Affinity pack from a weight matrix, a normalised matrix, or data rows."""
    M = read_matrix_csv(path)
    if kind == "weights":
        return normalize_affinity(M)
    if kind == "normalized":
        return M
    X = DataMatrix(M)
    return affinity(X, resolve_sigma(X, sigma))


# commands ------------------------------------------------------------------------

def cmd_gen(args):
    out = Path(args.output)
    if args.family == "blocks":
        W, labels = block_affinity(BlockAffinitySpec(tuple(args.sizes), args.eps, args.seed))
        write_matrix_csv(out, W)
    elif args.family == "sparse":
        spec = SparseCloudSpec(args.N, args.n, args.s, args.k, args.noise, args.basis_seed,
                               args.seed)
        X, B = sparse_cloud(spec, return_basis=True)
        write_matrix_csv(out, X.X)
        if args.basis:
            write_matrix_csv(args.basis, B)
        labels = X.labels
    else:
        spec = LowRankSpec(args.N, args.n, args.r, args.k, args.noise, args.seed,
                           args.extra_rank, args.extra_scale, args.extra_decay)
        X = lowrank_images(spec)
        write_matrix_csv(out, X.X)
        labels = X.labels
    if args.labels:
        write_labels_csv(args.labels, labels)
    _write_manifest(args, out)


def _embedding_summary(emb, sigma):
    return {"k": emb.k, "drop_first": emb.drop_first, "eigenvalues": emb.eigenvalues,
            "alpha": emb.alpha, "sigma": sigma, "leading_spectrum": emb.spectrum[:10]}


def cmd_cluster(args):
    out = Path(args.output)
    if args.kind == "data":
        X = _load_data(args.input, args.labels)
        sigma = resolve_sigma(X, args.sigma)
        pack = affinity(X, sigma)
        truth = X.labels
    else:
        pack = normalize_affinity(read_matrix_csv(args.input))
        sigma = None
        truth = read_labels_csv(args.labels, pack.N) if args.labels else None
    emb = spectral_embed(pack, args.k, args.drop_first)
    assignment = cluster_embedding(emb, args.clusters or args.k, SeededRng(args.seed),
                                   args.restarts, args.normalize_rows)
    rho = misclassification_rate(assignment.labels, truth) if truth is not None else None
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out / "embedding.csv", emb.Vk)
    write_labels_csv(out / "labels.csv", assignment.labels)
    summary = _embedding_summary(emb, sigma)
    summary["wcss"] = assignment.wcss
    manifest = _write_manifest(args, out, is_dir=True)
    write_json(out / "report.json", report_document(manifest, [], summary, rho))


def cmd_compress(args):
    X = _load_data(args.input)
    op = MeasurementOperator.from_seed(args.m, X.n, args.seed)
    Y = measure(X, op)
    write_matrix_csv(args.output, Y.X)
    extra = {"operator": op.describe()}
    if X.N >= 2:
        try:
            rip = empirical_rip_delta(X, op)
            extra["rip"] = {"delta_emp": rip.delta_emp, "worst_pair": list(rip.worst_pair),
                            "pairs_checked": rip.pairs_checked}
        except ValueError:
            pass
    _write_manifest(args, Path(args.output), extra=extra)


def cmd_complete(args):
    truth = None
    if args.observed:
        observed = read_mask_csv(args.observed, args.shape)
    else:
        if args.input is None or args.p is None:
            raise UsageError("complete: give --observed, or -i with -p to sample a mask")
        truth = read_matrix_csv(args.input)
        mask = sample_mask(*truth.shape, args.p, SeededRng(args.seed))
        observed = PartialMatrix.from_dense(truth, mask)
        if args.mask_out:
            write_mask_csv(args.mask_out, observed)
    res = soft_impute(observed, tol=args.tol, max_iter=args.max_iter, engine=args.engine)
    write_matrix_csv(args.output, res.Xhat)
    info = {"iterations": res.iterations, "lambda_final": res.lambda_final,
            "observed_residual": res.observed_residual, "converged": res.converged,
            "engine": res.engine, "p": observed.mask.p}
    if truth is not None:
        info["gamma_emp"] = float(np.linalg.norm(truth - res.Xhat))
    _write_manifest(args, Path(args.output), extra={"completion": info})
    if args.strict and not res.converged:
        raise NumericalFailure("soft-impute did not converge")


def cmd_compare(args):
    V = read_matrix_csv(args.a)
    Vt = read_matrix_csv(args.b)
    try:
        cmp = compare(V, Vt)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = Path(args.output)
    manifest = _write_manifest(args, out)
    doc = report_document(manifest, [], None, None)
    doc["comparison"] = cmp.to_dict()
    doc["comparison"]["Q"] = cmp.Q
    write_json(out, doc)


def cmd_verify(args):
    if args.check in ("stewart", "sintheta", "embed"):
        A = _load_affinity(args.a, args.kind, args.sigma)
        At = _load_affinity(args.b, args.kind, args.sigma)
        if args.check == "stewart":
            reports = [check_stewart(A, At, args.slack)]
        elif args.check == "sintheta":
            reports = list(check_sin_theta(A, At, args.k))
        else:
            reports = list(check_embedding(A, At, args.k))
    elif args.check == "cs":
        X = _load_data(args.input)
        op = MeasurementOperator.from_seed(args.m, X.n, args.seed)
        reports = list(check_cs_affinity(X, op, resolve_sigma(X, args.sigma)))
    else:
        X = _load_data(args.input)
        Xh = read_matrix_csv(args.xhat)
        if Xh.shape != X.X.shape:
            raise InputError(f"{args.xhat}: shape {Xh.shape} does not match {X.X.shape}")
        reports = [check_mc_affinity(X, Xh, resolve_sigma(X, args.sigma), args.p, args.delta)]
    out = Path(args.output)
    manifest = _write_manifest(args, out)
    write_json(out, report_document(manifest, reports))
    failed = [r.theorem for r in reports if not r.satisfied]
    if args.strict and failed:
        raise NumericalFailure(f"inequalities not satisfied: {', '.join(failed)}")


def cmd_sweep(args):
    if args.family == "measurements":
        values = parse_range(args.values, int)
        if args.metric == "embed":
            setup = CombinedSetup(args.N, args.n, args.s, args.k, args.noise, args.p)
            rows = sweep_embedding_error(values, args.trials, args.seed, setup)
        else:
            setup = CloudSetup(args.N, args.n, args.s, args.k, args.noise, args.drop_first)
            rows = sweep_measurements(values, args.trials, args.seed, setup)
    elif args.family == "rank":
        setup = LowRankSetup(args.N, args.n, args.r, args.k, args.noise, args.p)
        rows = sweep_rank(parse_range(args.values, int), args.trials, args.seed, setup)
    else:
        setup = LowRankSetup(args.N, args.n, args.r, args.k, args.noise)
        rows = sweep_fraction(parse_range(args.values, float), args.trials, args.seed, setup)
    text = "value,mean,std,trials\n" + "".join(
        "%.17g,%.17g,%.17g,%d\n" % (r.value, r.mean, r.std, r.trials) for r in rows)
    atomic_write_text(args.output, text)
    _write_manifest(args, Path(args.output))


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="specperturb",
                description="Spectral clustering under compression, missing entries and noise.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate synthetic data")
    gs = g.add_subparsers(dest="family", required=True, parser_class=_Parser)
    b = gs.add_parser("blocks", help="block-diagonal weight matrix with uniform noise")
    b.add_argument("--sizes", type=_int_list, required=True)
    b.add_argument("--eps", type=float, default=0.1)
    s = gs.add_parser("sparse", help="clusters sparse in a random orthonormal basis")
    s.add_argument("--N", type=int, default=100)
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--s", type=int, default=3)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--noise", type=float, default=0.05)
    s.add_argument("--basis-seed", type=int, default=0)
    s.add_argument("--basis", help="also write the basis matrix here")
    lr = gs.add_parser("lowrank", help="clustered rows in a low-dimensional subspace")
    lr.add_argument("--N", type=int, default=1000)
    lr.add_argument("--n", type=int, default=500)
    lr.add_argument("--r", type=int, default=3)
    lr.add_argument("--k", type=int, default=3)
    lr.add_argument("--noise", type=float, default=0.1)
    lr.add_argument("--extra-rank", type=int, default=0)
    lr.add_argument("--extra-scale", type=float, default=0.6)
    lr.add_argument("--extra-decay", type=float, default=0.95)
    for q in (b, s, lr):
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("-o", "--output", required=True)
        q.add_argument("--labels", help="write ground-truth labels here")
        q.set_defaults(func=cmd_gen)

    c = sub.add_parser("cluster", help="spectral embedding and k-means")
    c.add_argument("-i", "--input", required=True)
    c.add_argument("--kind", choices=("data", "weights"), default="data")
    c.add_argument("--labels", help="ground-truth labels, enables rho")
    c.add_argument("--sigma", type=_sigma, default="median")
    c.add_argument("-k", type=int, required=True, help="number of eigenvectors")
    c.add_argument("--clusters", type=int, help="number of clusters (default k)")
    c.add_argument("--drop-first", action="store_true")
    c.add_argument("--normalize-rows", action="store_true")
    c.add_argument("--restarts", type=int, default=KMEANS_RESTARTS)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("-o", "--output", required=True, help="output directory")
    c.set_defaults(func=cmd_cluster)

    cp = sub.add_parser("compress", help="apply a seeded Gaussian measurement operator")
    cp.add_argument("-i", "--input", required=True)
    cp.add_argument("-m", type=int, required=True)
    cp.add_argument("--seed", type=int, default=0)
    cp.add_argument("-o", "--output", required=True)
    cp.set_defaults(func=cmd_compress)

    cm = sub.add_parser("complete", help="soft-impute matrix completion")
    cm.add_argument("--observed", help="row,col,value triples")
    cm.add_argument("--shape", type=_shape, help="N,n for --observed (default: inferred)")
    cm.add_argument("-i", "--input", help="full matrix to subsample")
    cm.add_argument("-p", type=_prob, help="observed fraction when subsampling")
    cm.add_argument("--mask-out", help="write the sampled triples here")
    cm.add_argument("--seed", type=int, default=0)
    cm.add_argument("--tol", type=float, default=1e-6)
    cm.add_argument("--max-iter", type=int, default=500)
    cm.add_argument("--engine", choices=("auto", "dense", "lowrank"), default="auto")
    cm.add_argument("--strict", action="store_true")
    cm.add_argument("-o", "--output", required=True)
    cm.set_defaults(func=cmd_complete)

    cc = sub.add_parser("compare", help="angles and Procrustes distance between two bases")
    cc.add_argument("-a", required=True)
    cc.add_argument("-b", required=True)
    cc.add_argument("-o", "--output", required=True)
    cc.set_defaults(func=cmd_compare)

    v = sub.add_parser("verify", help="evaluate a perturbation inequality")
    vs = v.add_subparsers(dest="check", required=True, parser_class=_Parser)
    spectral = []
    for name in ("stewart", "sintheta", "embed"):
        q = vs.add_parser(name)
        q.add_argument("-a", required=True, help="unperturbed matrix")
        q.add_argument("-b", required=True, help="perturbed matrix")
        q.add_argument("--kind", choices=("weights", "normalized", "data"), default="weights")
        q.add_argument("--sigma", type=_sigma, default="median")
        spectral.append(q)
    spectral[0].add_argument("--slack", type=float, default=10.0)
    for q in spectral[1:]:
        q.add_argument("-k", type=int, required=True)
    vc = vs.add_parser("cs")
    vc.add_argument("-i", "--input", required=True)
    vc.add_argument("-m", type=int, required=True)
    vc.add_argument("--seed", type=int, default=0)
    vc.add_argument("--sigma", type=_sigma, default="median")
    vm = vs.add_parser("mc")
    vm.add_argument("-i", "--input", required=True)
    vm.add_argument("--xhat", required=True)
    vm.add_argument("--sigma", type=_sigma, default="median")
    vm.add_argument("-p", type=_prob)
    vm.add_argument("--delta", type=float)
    for q in spectral + [vc, vm]:
        q.add_argument("--strict", action="store_true")
        q.add_argument("-o", "--output", required=True)
        q.set_defaults(func=cmd_verify)

    sw = sub.add_parser("sweep", help="seed-averaged curves")
    ss = sw.add_subparsers(dest="family", required=True, parser_class=_Parser)
    sm = ss.add_parser("measurements")
    sm.add_argument("--values", default="8..1024*2")
    sm.add_argument("--metric", choices=("rho", "embed"), default="rho")
    sm.add_argument("--N", type=int, default=150)
    sm.add_argument("--n", type=int, default=128)
    sm.add_argument("--s", type=int, default=5)
    sm.add_argument("--k", type=int, default=3)
    sm.add_argument("--noise", type=float, default=0.7)
    sm.add_argument("-p", type=_prob, default=0.1, help="observed fraction (embed metric)")
    sm.add_argument("--drop-first", action="store_true")
    sr = ss.add_parser("rank")
    sr.add_argument("--values", default="0,4,8", help="extra rank on top of --r")
    sr.add_argument("-p", type=_prob, default=0.1)
    sf = ss.add_parser("fraction")
    sf.add_argument("--values", default="0.05,0.1,0.2,0.4")
    for q in (sr, sf):
        q.add_argument("--N", type=int, default=1000)
        q.add_argument("--n", type=int, default=500)
        q.add_argument("--r", type=int, default=3)
        q.add_argument("--k", type=int, default=3)
        q.add_argument("--noise", type=float, default=0.1)
    for q in (sm, sr, sf):
        q.add_argument("--trials", type=int, default=20)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("-o", "--output", required=True)
        q.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (InputError, OSError) as exc:
        print(f"specperturb: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"specperturb: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except np.linalg.LinAlgError as exc:
        print(f"specperturb: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"specperturb: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
