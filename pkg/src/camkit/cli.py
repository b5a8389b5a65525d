"""Command-line surface: explain, evaluate, make-model, make-sample.

``explain`` runs one attribution method on one sample and writes a result
file (JSON, sorted keys) plus heatmap images next to it.  ``evaluate``
scores several methods over several samples against the faithfulness
metrics and emits one report per method.  Result files are deterministic
for identical flags (including --seed); wall-clock timings therefore go
to a ``<output>.timings.json`` sidecar instead of the result file itself.

Samples are processed by a thread pool sized by --workers (default from
the ``CAMKIT_WORKERS`` environment variable, else 1); results are merged
in sample order and written once by the main thread.
"""

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import graph, heatmap, metrics, methods, modelio, shapley, synthetic

METHOD_NAMES = (
    "grad-cam",
    "grad-cam++",
    "xgrad-cam",
    "score-cam",
    "ablation-cam",
    "shap-cam",
    "lift-cam",
    "exact-shapley",
)
METRIC_NAMES = ("ic-ad-add", "auc", "pointing", "cosine")
DEFAULT_ORDERINGS = 100

_TRACE_METHODS = {
    "grad-cam": methods.grad_cam,
    "grad-cam++": methods.grad_cam_pp,
    "xgrad-cam": methods.xgrad_cam,
    "lift-cam": methods.lift_cam,
}


def compute_coefficients(
    model, image, a, class_index, method, *, seed=0, orderings=DEFAULT_ORDERINGS, baseline=None, trace=None
):
    """Dispatch one attribution method by CLI name to a CoefficientVector."""
    if method in _TRACE_METHODS:
        if trace is None:
            trace = graph.build_head_trace(model, a)
        return _TRACE_METHODS[method](model, trace, a, class_index)
    if method == "score-cam":
        return methods.score_cam(model, image, a, class_index, baseline=baseline)
    if method == "ablation-cam":
        return methods.ablation_cam(model, a, class_index)
    if method == "shap-cam":
        oset = shapley.OrderingSet.sample(a.shape[0], orderings, seed)
        return shapley.shap_cam(model, a, class_index, oset)
    if method == "exact-shapley":
        return shapley.exact_shapley(model, a, class_index)
    raise ValueError(f"unknown method {method!r}, expected one of {', '.join(METHOD_NAMES)}")


def _write_json(path, payload):
    with open(path, "w", encoding="ascii") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")


def _workers(args):
    if args.workers is not None:
        count = args.workers
    else:
        count = int(os.environ.get("CAMKIT_WORKERS", "1"))
    if count < 1:
        raise ValueError(f"worker count must be >= 1, got {count}")
    return count


# ---------------------------------------------------------------- explain

def _cmd_explain(args):
    model = modelio.load_model(args.model)
    sample, _ = modelio.load_sample(args.input)
    baseline = modelio.load_tensor(args.baseline) if args.baseline else None

    t0 = time.perf_counter()
    a = graph.run_layers(model.frontend, sample.image)
    coeffs = compute_coefficients(
        model,
        sample.image,
        a,
        args.class_index,
        args.method,
        seed=args.seed,
        orderings=args.orderings,
        baseline=baseline,
    )
    t1 = time.perf_counter()
    emap = methods.assemble_map(a, coeffs, sample.image.shape[1:])
    t2 = time.perf_counter()

    gray_path = args.output + ".pgm"
    overlay_path = args.output + ".ppm"
    timings_path = args.output + ".timings.json"
    heatmap.write_pgm(gray_path, emap.normalized)
    heatmap.write_overlay(overlay_path, sample.image, emap.normalized)

    result = {
        "format": "camkit-explain-result v1",
        "method": args.method,
        "class_index": args.class_index,
        "seed": args.seed,
        "orderings": args.orderings if args.method == "shap-cam" else None,
        "num_maps": int(a.shape[0]),
        "coefficients": [float(v) for v in coeffs.values],
        "coefficient_sum": float(coeffs.values.sum()),
        "raw_map": [[float(v) for v in row] for row in emap.raw],
        "files": {
            "heatmap_gray": os.path.basename(gray_path),
            "heatmap_overlay": os.path.basename(overlay_path),
            "timings": os.path.basename(timings_path),
        },
    }
    _write_json(args.output, result)
    _write_json(
        timings_path,
        {
            "coefficient_seconds": t1 - t0,
            "assembly_seconds": t2 - t1,
            "total_seconds": t2 - t0,
        },
    )
    return 0


# --------------------------------------------------------------- evaluate

def _reference_method(model):
    """Exact Shapley when feasible, seeded shap-cam above the oracle cap."""
    if model.num_maps <= shapley.EXACT_CHANNEL_CAP:
        return "exact-shapley", False
    return "shap-cam", True


def _evaluate_one(model, sample, method_list, metric_list, seed, orderings):
    """All requested measurements for one sample; pure, runs on any thread."""
    image = sample.image
    a = graph.run_layers(model.frontend, image)
    trace = graph.build_head_trace(model, a)
    ref_name, approximate = _reference_method(model)
    reference = None
    if "cosine" in metric_list:
        reference = compute_coefficients(
            model, image, a, sample.class_index, ref_name, seed=seed, orderings=orderings, trace=trace
        )

    out = {}
    for method in method_list:
        t0 = time.perf_counter()
        coeffs = compute_coefficients(
            model, image, a, sample.class_index, method, seed=seed, orderings=orderings, trace=trace
        )
        elapsed = time.perf_counter() - t0
        emap = methods.assemble_map(a, coeffs, image.shape[1:])
        def prob_of(img):
            return float(graph.forward_full(model, img)[2][sample.class_index])

        entry = {"seconds": elapsed}
        if "ic-ad-add" in metric_list:
            entry["y"] = prob_of(image)
            entry["o"] = prob_of(metrics.explanation_image(image, emap))
            entry["d"] = prob_of(metrics.inverted_explanation_image(image, emap))
        if "auc" in metric_list:
            entry["insertion_auc"], entry["deletion_auc"] = metrics.insertion_deletion_auc(
                model, sample, emap
            )
        if "pointing" in metric_list and sample.bbox is not None:
            try:
                entry["proportion"] = metrics.pointing_game(emap, sample.bbox)
            except ValueError:
                entry["proportion"] = None
        if reference is not None:
            try:
                entry["cosine"] = metrics.cosine_similarity(coeffs, reference)
            except ValueError:
                entry["cosine"] = None
        out[method] = entry
    return out


def _cmd_evaluate(args):
    model = modelio.load_model(args.model)
    method_list = args.methods.split(",")
    for m in method_list:
        if m not in METHOD_NAMES:
            raise ValueError(f"unknown method {m!r}, expected one of {', '.join(METHOD_NAMES)}")
    metric_list = args.metrics.split(",")
    for m in metric_list:
        if m not in METRIC_NAMES:
            raise ValueError(f"unknown metric {m!r}, expected one of {', '.join(METRIC_NAMES)}")

    samples = [modelio.load_sample(p)[0] for p in args.samples]
    workers = _workers(args)

    def work(sample):
        return _evaluate_one(model, sample, method_list, metric_list, args.seed, args.orderings)

    if workers == 1:
        per_sample = [work(s) for s in samples]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_sample = list(pool.map(work, samples))

    ref_name, approximate = _reference_method(model)
    reports = {}
    timings = {}
    for method in method_list:
        report = metrics.MetricReport(method=method)
        cosines = []
        for entry_by_method in per_sample:
            entry = entry_by_method[method]
            rec = metrics.SampleRecord(
                y=entry.get("y"),
                o=entry.get("o"),
                d=entry.get("d"),
                proportion=entry.get("proportion"),
                insertion_auc=entry.get("insertion_auc"),
                deletion_auc=entry.get("deletion_auc"),
            )
            if rec.y is not None and rec.y == 0.0:
                rec.excluded = True
                report.excluded_count += 1
            report.records.append(rec)
            cosines.append(entry.get("cosine"))
        payload = report.to_dict()
        kept = [c for c in cosines if c is not None]
        payload["cosine"] = {
            "reference": ref_name,
            "approximate_reference": approximate,
            "per_sample": cosines,
            "mean": float(np.mean(kept)) if kept else None,
        } if "cosine" in metric_list else None
        reports[method] = payload
        timings[method] = {"mean_seconds": float(np.mean([e[method]["seconds"] for e in per_sample]))}
        sys.stdout.write(report.render_text())
        if "cosine" in metric_list and kept:
            sys.stdout.write(f"cosine vs {ref_name}        {float(np.mean(kept)):.6g}\n")
        sys.stdout.write("\n")

    _write_json(
        args.output,
        {
            "format": "camkit-evaluate-report v1",
            "metrics": metric_list,
            "methods": method_list,
            "num_samples": len(samples),
            "seed": args.seed,
            "orderings": args.orderings,
            "reports": reports,
        },
    )
    _write_json(args.output + ".timings.json", timings)
    return 0


# ------------------------------------------------------------- fixtures

def _cmd_make_model(args):
    model = synthetic.generate_synthetic_model(
        num_maps=args.maps,
        spatial=args.spatial,
        head_kind=args.head,
        num_classes=args.classes,
        seed=args.seed,
    )
    modelio.save_model(model, args.output)
    return 0


def _cmd_make_sample(args):
    model = modelio.load_model(args.model)
    sample = synthetic.generate_synthetic_sample(model, args.seed, bbox_fraction=args.bbox_fraction)
    _, logits, _ = graph.forward_full(model, sample.image)
    modelio.save_sample(args.output, sample, ref_logits=logits)
    return 0


# ----------------------------------------------------------------- main

def build_parser():
    parser = argparse.ArgumentParser(prog="camkit", description="Class activation map attribution toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explain", help="run one attribution method on one sample")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="sample file")
    p.add_argument("--class", dest="class_index", type=int, required=True)
    p.add_argument("--method", required=True, choices=METHOD_NAMES)
    p.add_argument("--output", required=True, help="result file; heatmaps written alongside")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--orderings", type=int, default=DEFAULT_ORDERINGS)
    p.add_argument("--baseline", default=None, help="tensor file with a score-cam baseline image")
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("evaluate", help="score methods against the faithfulness metrics")
    p.add_argument("--model", required=True)
    p.add_argument("--samples", nargs="+", required=True)
    p.add_argument("--methods", required=True, help="comma-separated method names")
    p.add_argument("--metrics", default=",".join(METRIC_NAMES), help="comma-separated metric names")
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--orderings", type=int, default=DEFAULT_ORDERINGS)
    p.add_argument("--workers", type=int, default=None, help="default: $CAMKIT_WORKERS or 1")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("make-model", help="write a seeded synthetic model file")
    p.add_argument("--output", required=True)
    p.add_argument("--maps", type=int, default=8)
    p.add_argument("--spatial", type=int, default=4)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--head", default="linear", choices=synthetic.HEAD_KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_make_model)

    p = sub.add_parser("make-sample", help="write a seeded synthetic sample for a model")
    p.add_argument("--model", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bbox-fraction", type=float, default=0.4)
    p.set_defaults(func=_cmd_make_sample)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
