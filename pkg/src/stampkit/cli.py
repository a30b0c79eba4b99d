"""Command-line front end for the stamp pipeline.

Subcommands follow the pipeline order: synth, learn-dict, rank, extract,
train, eval, detect, bench, dump-atoms. Every command takes --seed and is
reproducible; invalid input exits nonzero with a one-line diagnostic.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from stampkit import classifier, detector, dictionary, pipeline
from stampkit.imaging import BoundingBox, read_image, write_image
from stampkit.model_io import StampModel, load_model, save_model
from stampkit.synth import SynthSpec, gen_dataset, manifest_sha256, read_manifest


def _positive_rows(rows):
    pos = [r for r in rows if r.label == pipeline.LABEL_POS]
    if not pos:
        raise ValueError("manifest contains no stamp rows")
    return pos


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        page_h=args.page_h,
        page_w=args.page_w,
        shape=args.shape,
        text_density=args.text_density,
        noise=args.noise,
        fade=args.fade,
        lowres_factor=args.lowres,
    )
    manifest = gen_dataset(
        args.n_pos, args.n_neg, spec, args.seed, args.out, box_jitter=args.box_jitter
    )
    print(f"wrote {args.n_pos + args.n_neg} images, manifest {manifest}")
    return 0


def _cmd_learn_dict(args) -> int:
    rows = read_manifest(args.manifest)
    resize_hw = (args.resize_h, args.resize_w)
    pos_images = [
        pipeline.load_verification_image(r, resize_hw) for r in _positive_rows(rows)
    ]
    transform, atoms = pipeline.learn_dictionary(
        pos_images,
        args.patch,
        args.k,
        epsilon=args.epsilon,
        n_patches=args.patches,
        kmeans_iters=args.kmeans_iters,
        rng_seed=args.seed,
    )
    model = StampModel(
        config={
            "patch_side": args.patch,
            "resize_h": args.resize_h,
            "resize_w": args.resize_w,
            "seed": args.seed,
            "manifest_sha256": manifest_sha256(args.manifest),
        },
        whitening=transform,
        dictionary=atoms,
    )
    save_model(args.model, model)
    print(f"learned {atoms.k} atoms of {args.patch}x{args.patch}, model {args.model}")
    return 0


def _cmd_rank(args) -> int:
    model = load_model(args.model)
    rows = read_manifest(args.manifest)
    pos_images = [
        pipeline.load_verification_image(r, model.resize_hw) for r in _positive_rows(rows)
    ]
    ranking = pipeline.pick_ranking_images(pos_images, args.rank_images, args.seed)
    scores = dictionary.rank_atoms(model.dictionary, model.whitening, ranking)
    v = dictionary.select_subset(scores, args.tau)
    model.scores = scores
    model.v = v
    model.config["tau"] = args.tau
    save_model(args.model, model)
    print(f"selected v={v} of k={model.dictionary.k} atoms (tau={args.tau})")
    for pos, idx in enumerate(scores.rank):
        marker = "*" if pos < v else " "
        print(f" {marker} rank {pos:3d}  atom {idx:3d}  score {scores.scores[idx]:.6f}")
    return 0


def _cmd_extract(args) -> int:
    model = load_model(args.model)
    rows = read_manifest(args.manifest)
    images, labels = pipeline.load_verification_set(rows, model.resize_hw)
    x, elapsed = pipeline.featurize(images, model.ranked_dictionary())
    data = np.column_stack([labels.astype(np.float64), x])
    header = "label," + ",".join(f"f{i}" for i in range(x.shape[1]))
    np.savetxt(args.out, data, delimiter=",", header=header, comments="")
    print(f"wrote {x.shape[0]}x{x.shape[1]} features to {args.out} ({elapsed:.2f}s)")
    return 0


def _cmd_train(args) -> int:
    model = load_model(args.model)
    rows = read_manifest(args.manifest)
    images, labels = pipeline.load_verification_set(rows, model.resize_hw)
    train_idx, test_idx = classifier.split(labels, args.train_frac, args.seed)
    rd = model.ranked_dictionary()
    x_train, _ = pipeline.featurize([images[i] for i in train_idx], rd)
    x_test, extract_time = pipeline.featurize([images[i] for i in test_idx], rd)
    svm = classifier.train_svm(
        x_train, labels[train_idx], c=args.c, epochs=args.epochs, rng_seed=args.seed
    )
    model.svm = svm
    model.config["split_seed"] = args.seed
    model.config["train_fraction"] = args.train_frac
    save_model(args.model, model)
    report = classifier.evaluate(svm, x_test, labels[test_idx])
    _print_report(report, extract_time)
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(report.to_dict(), indent=2))
    return 0


def _cmd_eval(args) -> int:
    model = load_model(args.model)
    if model.svm is None:
        raise ValueError("model has no trained classifier; run train first")
    rows = read_manifest(args.manifest)
    images, labels = pipeline.load_verification_set(rows, model.resize_hw)
    x, extract_time = pipeline.featurize(images, model.ranked_dictionary())
    report = classifier.evaluate(model.svm, x, labels)
    _print_report(report, extract_time)
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(report.to_dict(), indent=2))
    return 0


def _print_report(report, extract_time) -> None:
    print(
        f"accuracy {report.accuracy:.2f}  precision {report.precision:.2f}  "
        f"recall {report.recall:.2f}  n={report.n_test}"
    )
    print(f"classifier scoring time: {report.test_time_seconds:.4f}s")
    print(f"feature extraction time: {extract_time:.4f}s")


def _annotate(page, gt_box, est_box, path) -> None:
    arr = np.round(np.clip(page, 0.0, 1.0) * 255.0).astype(np.uint8)
    im = Image.fromarray(arr, mode="L").convert("RGB")
    draw = ImageDraw.Draw(im)
    if gt_box is not None:
        draw.rectangle([gt_box.x0, gt_box.y0, gt_box.x1 - 1, gt_box.y1 - 1], outline=(0, 0, 255))
    draw.rectangle([est_box.x0, est_box.y0, est_box.x1 - 1, est_box.y1 - 1], outline=(255, 0, 0))
    im.save(path)


def _cmd_detect(args) -> int:
    model = load_model(args.model)
    rd = model.ranked_dictionary()
    rows = read_manifest(args.manifest)
    if args.annotate:
        Path(args.annotate).mkdir(parents=True, exist_ok=True)
    results = []
    ious = []
    for row in rows:
        page = pipeline.load_page(row)
        det = detector.detect(
            page,
            rd,
            window_frac=(args.window_h, args.window_w),
            theta=args.theta,
            lower_half_only=args.lower_half,
        )
        results.append((row.path, det))
        if row.box is not None:
            ious.append(detector.iou(det.box, row.box))
        if args.annotate:
            _annotate(page, row.box, det.box, Path(args.annotate) / f"{row.path.stem}_det.png")
    with open(args.out, "w") as fh:
        fh.write("path,x0,y0,x1,y1,peak\n")
        for path, det in results:
            b = det.box
            fh.write(f"{path},{b.x0},{b.y0},{b.x1},{b.y1},{det.response_peak:.6f}\n")
    print(f"detected on {len(results)} pages, results in {args.out}")
    if ious:
        print(f"mean IoU vs manifest boxes: {float(np.mean(ious)):.4f}")
    return 0


def _cmd_bench(args) -> int:
    rows = read_manifest(args.manifest)
    report = pipeline.run_benchmark(
        rows,
        resize_hw=(args.resize_h, args.resize_w),
        m=args.patch,
        k=args.k,
        tau=args.tau,
        n_patches=args.patches,
        train_fraction=args.train_frac,
        c=args.c,
        epochs=args.epochs,
        rng_seed=args.seed,
    )
    header = ("Method", "# of filters", "Acc.", "Prec.", "Recall", "Test time (s)")
    print(f"{header[0]:<10}{header[1]:>14}{header[2]:>9}{header[3]:>9}{header[4]:>9}{header[5]:>16}")
    for row in report:
        print(
            f"{row['method']:<10}{row['n_filters']:>14}{row['accuracy']:>9.2f}"
            f"{row['precision']:>9.2f}{row['recall']:>9.2f}{row['test_time_s']:>16.4f}"
        )
    for row in report:
        print(
            f"feature extraction time ({row['method']}, {row['n_filters']} filters): "
            f"{row['extract_time_s']:.4f}s"
        )
    if args.json_out:
        rows_json = [
            {
                "method": r["method"],
                "n_filters": r["n_filters"],
                "accuracy": r["accuracy"],
                "precision": r["precision"],
                "recall": r["recall"],
                "test_time_s": r["test_time_s"],
            }
            for r in report
        ]
        extras = {f"{r['method']}/{r['n_filters']}": r["extract_time_s"] for r in report}
        Path(args.json_out).write_text(
            json.dumps({"rows": rows_json, "feature_extract_time_s": extras}, indent=2)
        )
    return 0


def _cmd_dump_atoms(args) -> int:
    model = load_model(args.model)
    if model.dictionary is None:
        raise ValueError("model has no dictionary")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rd = model.ranked_dictionary()
    m = model.dictionary.atom_side
    order = rd.scores.rank
    tiles = []
    for pos, idx in enumerate(order):
        atom = model.dictionary.atoms[idx].reshape(m, m)
        lo, hi = atom.min(), atom.max()
        tile = (atom - lo) / (hi - lo) if hi > lo else np.zeros_like(atom)
        write_image(out / f"atom_{pos:03d}.png", tile)
        tiles.append(tile)
    cols = 8
    k = len(tiles)
    rows_n = (k + cols - 1) // cols
    gap = 2
    mosaic = np.ones((rows_n * (m + gap) + gap, cols * (m + gap) + gap))
    for i, tile in enumerate(tiles):
        r = gap + (i // cols) * (m + gap)
        c = gap + (i % cols) * (m + gap)
        mosaic[r : r + m, c : c + m] = tile
    im = Image.fromarray(np.round(mosaic * 255).astype(np.uint8), mode="L").convert("RGB")
    draw = ImageDraw.Draw(im)
    for i in range(rd.v):
        r = gap + (i // cols) * (m + gap)
        c = gap + (i % cols) * (m + gap)
        draw.rectangle([c - 1, r - 1, c + m, r + m], outline=(255, 0, 0))
    im.save(out / "mosaic.png")
    print(f"wrote {k} atom tiles and mosaic.png to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stampkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--n-pos", type=int, default=400)
    p.add_argument("--n-neg", type=int, default=400)
    p.add_argument("--page-h", type=int, default=300)
    p.add_argument("--page-w", type=int, default=200)
    p.add_argument("--shape", default="random")
    p.add_argument("--text-density", type=float, default=0.5)
    p.add_argument("--noise", type=float, default=0.03)
    p.add_argument("--fade", type=float, default=0.2)
    p.add_argument("--lowres", type=float, default=1.0)
    p.add_argument("--box-jitter", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("learn-dict", help="sample patches, fit whitening, run K-means")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--patch", type=int, default=16)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--patches", type=int, default=20000)
    p.add_argument("--kmeans-iters", type=int, default=100)
    p.add_argument("--resize-h", type=int, default=64)
    p.add_argument("--resize-w", type=int, default=96)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_learn_dict)

    p = sub.add_parser("rank", help="rank atoms on a stamp image and select the subset")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--tau", type=float, default=0.33)
    p.add_argument("--rank-images", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("extract", help="write feature vectors for a manifest to CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train", help="split, train the linear classifier, evaluate")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--train-frac", type=float, default=0.7)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--json-out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model on a manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--json-out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("detect", help="locate stamps on full pages")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--annotate")
    p.add_argument("--window-h", type=float, default=0.45)
    p.add_argument("--window-w", type=float, default=0.55)
    p.add_argument("--theta", type=float, default=0.3)
    p.add_argument("--lower-half", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("bench", help="four-way filter comparison on one manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--patch", type=int, default=16)
    p.add_argument("--tau", type=float, default=0.33)
    p.add_argument("--patches", type=int, default=20000)
    p.add_argument("--resize-h", type=int, default=64)
    p.add_argument("--resize-w", type=int, default=96)
    p.add_argument("--train-frac", type=float, default=0.7)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--json-out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("dump-atoms", help="write atom tiles and the ranked mosaic as PNG")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_dump_atoms)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
