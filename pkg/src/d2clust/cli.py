"""Command-line interface: ``d2clust {cluster,distance,eval,synth,pam-convert}``.

Exit codes: 0 on success, 2 for invalid input, 3 when a solver fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import formats
from .core import Config, GroundMetric, SolverError, ValidationError, WeightedDataset
from .d2 import Assignment
from .metrics import categorical_distance, davies_bouldin, mean_squared_dispersion, mm_distance_sq
from .parallel import WorkerError, parallel_d2_cluster, sequential_d2_cluster
from .synth import generate
from .transport import distance_matrix_sq

log = logging.getLogger("d2clust")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3

SEGMENTER_NAMES = {"split": "binary-split", "vq": "vq"}


def _ground(spec: str, alphabet, data: WeightedDataset | None = None) -> GroundMetric:
    if spec == "euclidean":
        if data is not None and data.objects[0].dists[0].symbolic:
            raise ValidationError("symbolic data needs --ground matrix:PATH")
        return GroundMetric.euclidean()
    if spec.startswith("matrix:"):
        return formats.ground_from_matrix_file(spec[len("matrix:"):], alphabet)
    raise ValidationError(f"--ground must be 'euclidean' or 'matrix:PATH', got {spec!r}")


def cmd_cluster(args) -> int:
    data, alphabet = formats.read_dataset(args.input)
    ground = _ground(args.ground, alphabet, data)
    cfg = Config(k=args.k, tau=args.tau, e=args.e, workers=args.workers,
                 max_iters_centroid=args.max_iters, max_iters_labeling=args.max_iters,
                 rel_tol=args.tol, seed=args.seed,
                 fix_supports=args.fix_supports or ground.symbolic,
                 segmentation=SEGMENTER_NAMES[args.segmenter],
                 codebook_size=args.codebook_size)
    t0 = time.perf_counter()
    if args.mode == "parallel":
        assignment, trace = parallel_d2_cluster(data, args.k, ground, cfg)
        report = trace.to_dict()
    else:
        assignment = sequential_d2_cluster(data, args.k, ground, cfg,
                                           constrained=args.mode == "constrained")
        report = {"levels": [], "labels": assignment.labels.tolist(),
                  "iters": assignment.iters, "history": assignment.history}
    report.update({
        "mode": args.mode,
        "seconds": time.perf_counter() - t0,
        "k": assignment.k,
        "objective": assignment.objective,
        "proportions": assignment.proportions.tolist(),
        "config": {f: getattr(cfg, f) for f in cfg.__dataclass_fields__},
    })
    prefix = args.out
    ids = [o.id for o in data.objects]
    formats.write_labels(f"{prefix}.labels", ids, assignment.labels)
    formats.write_dataset(f"{prefix}.centroids", assignment.centroids,
                          assignment.cluster_weights(data.weights), alphabet)
    Path(f"{prefix}.trace.json").write_text(json.dumps(report, indent=1), encoding="utf-8")
    print(f"{assignment.k} clusters, objective {assignment.objective:.6g}, "
          f"{report['seconds']:.2f}s -> {prefix}.labels, {prefix}.centroids, {prefix}.trace.json")
    return EXIT_OK


def cmd_distance(args) -> int:
    a, alpha_a = formats.read_dataset(args.a)
    b, alpha_b = formats.read_dataset(args.b)
    if alpha_a != alpha_b:
        raise ValidationError("the two datasets use different alphabets")
    ground = _ground(args.ground, alpha_a, a)
    d = distance_matrix_sq(list(a.objects), list(b.objects), ground)
    if not args.squared:
        d = np.sqrt(d)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        out.write("\t" + "\t".join(o.id for o in b.objects) + "\n")
        for o, row in zip(a.objects, d):
            out.write(o.id + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _load_assignment(data: WeightedDataset, labels_path, centroids_path, alphabet) -> Assignment:
    labels = formats.read_labels(labels_path, [o.id for o in data.objects])
    if centroids_path is None:
        centroids, props = [], np.zeros(0)
    else:
        cdata, calpha = formats.read_dataset(centroids_path)
        if calpha is not None and alphabet is not None and calpha != alphabet:
            raise ValidationError("centroid file alphabet differs from the dataset's")
        centroids = list(cdata.objects)
        props = cdata.weights / cdata.weights.sum()
    if labels.size and centroids and labels.max() >= len(centroids):
        raise ValidationError(f"label {labels.max()} has no centroid")
    return Assignment(labels, centroids, props, float("nan"))


def cmd_eval(args) -> int:
    data, alphabet = formats.read_dataset(args.data)
    ground = _ground(args.ground, alphabet, data)
    need_centroids = args.metric in ("msd", "mm", "dbi")
    if need_centroids and not args.centroids:
        raise ValidationError(f"--metric {args.metric} needs --centroids")
    a = _load_assignment(data, args.labels, args.centroids if need_centroids else None, alphabet)
    if args.metric == "msd":
        value = mean_squared_dispersion(data, a, ground)
    elif args.metric == "dbi":
        mode = "squared-euclidean" if args.dbi_distance == "euclidean" else "squared-mallows"
        sizes = None if alphabet is None else [len(alphabet)] * data.n_dims
        value = davies_bouldin(data, a, mode, ground, sizes)
    elif args.metric == "mm":
        if not args.other_centroids:
            raise ValidationError("--metric mm needs --other-centroids")
        other, oalpha = formats.read_dataset(args.other_centroids)
        value = mm_distance_sq(a.centroids, a.proportions, list(other.objects),
                               other.weights / other.weights.sum(), ground)
    else:
        if not args.other_labels:
            raise ValidationError("--metric categorical needs --other-labels")
        other = formats.read_labels(args.other_labels, [o.id for o in data.objects])
        value = categorical_distance(a.labels, other)
    print(json.dumps({"metric": args.metric, "value": value}))
    return EXIT_OK


def cmd_synth(args) -> int:
    data, labels = generate(args.k, args.n_per, args.dim, args.supports, args.noise,
                            args.separation, args.seed)
    formats.write_dataset(args.out, data.objects, data.weights)
    if args.labels_out:
        formats.write_labels(args.labels_out, [o.id for o in data.objects], labels)
    print(f"wrote {len(data)} objects to {args.out}")
    return EXIT_OK


def cmd_pam_convert(args) -> int:
    symbols, p = formats.read_matrix(args.input)
    formats.write_matrix(args.out, symbols, formats.pam_convert(p))
    print(f"wrote {len(symbols)}x{len(symbols)} distance matrix to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="d2clust", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cluster", help="cluster a dataset file")
    c.add_argument("--input", required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--tau", type=int, default=50)
    c.add_argument("--e", type=int, default=5)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--mode", choices=["parallel", "sequential", "constrained"], default="parallel")
    c.add_argument("--segmenter", choices=sorted(SEGMENTER_NAMES), default="split")
    c.add_argument("--codebook-size", type=int, default=32)
    c.add_argument("--ground", default="euclidean", help="'euclidean' or 'matrix:PATH'")
    c.add_argument("--fix-supports", action="store_true")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--max-iters", type=int, default=500)
    c.add_argument("--tol", type=float, default=1e-4)
    c.add_argument("--out", required=True, help="output prefix")
    c.set_defaults(func=cmd_cluster)

    d = sub.add_parser("distance", help="pairwise distances between two dataset files")
    d.add_argument("--a", required=True)
    d.add_argument("--b", required=True)
    d.add_argument("--ground", default="euclidean")
    d.add_argument("--squared", action="store_true", help="report squared distances")
    d.add_argument("--out")
    d.set_defaults(func=cmd_distance)

    e = sub.add_parser("eval", help="evaluate a clustering")
    e.add_argument("--data", required=True)
    e.add_argument("--labels", required=True)
    e.add_argument("--centroids")
    e.add_argument("--metric", choices=["msd", "mm", "categorical", "dbi"], required=True)
    e.add_argument("--other-centroids", help="second centroid file (mm)")
    e.add_argument("--other-labels", help="second labels file (categorical)")
    e.add_argument("--dbi-distance", choices=["mallows", "euclidean"], default="mallows")
    e.add_argument("--ground", default="euclidean")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="generate a planted-cluster dataset")
    s.add_argument("--k", type=int, default=15)
    s.add_argument("--n-per", type=int, default=100)
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--supports", type=int, default=5)
    s.add_argument("--noise", type=float, default=0.15)
    s.add_argument("--separation", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--labels-out")
    s.set_defaults(func=cmd_synth)

    p = sub.add_parser("pam-convert", help="mutation probabilities -> distance matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pam_convert)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except WorkerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID if isinstance(exc.cause, ValidationError) else EXIT_SOLVER
    except (ValidationError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
