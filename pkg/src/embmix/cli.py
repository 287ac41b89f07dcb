"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .anchors import AnchorSet, Template, load_anchor_manifest, match_assign, render_anchor_sentences
from .errors import ConfigError, DataError, EmbmixError
from .evaluate import (
    ABLATION_ALGORITHMS,
    DEFAULT_RATIO_GRID,
    UnbalanceSpec,
    compute_metrics,
    run_ablation,
    subsample_unbalanced,
)
from .expansion import ExpansionConfig, expand_class_names
from .io import (
    Assignment,
    ClassSpec,
    load_dataset,
    load_embeddings,
    load_word_vectors,
    save_embeddings,
)
from .mixture import (
    FitConfig,
    Priors,
    bgmm_fit,
    compute_sigma_init,
    init_from_assignment,
    predict,
)
from .mixture.model import load_model, save_model
from .pca import DEFAULT_TARGET_ERROR, pca_fit, pca_transform
from .pipeline import (
    ExperimentConfig,
    emit_projection,
    run_pipeline,
    write_json,
    write_jsonl,
)


def _read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


def _read_jsonl(path) -> list[dict]:
    records = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return records


def _load_class_names(path) -> list[list[str]]:
    """Class file: JSON array whose entries are a name or a list of names."""
    raw = _read_json(path)
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}: expected a non-empty JSON array of classes")
    classes = []
    for i, entry in enumerate(raw):
        if isinstance(entry, str):
            classes.append([entry])
        elif isinstance(entry, list) and entry and all(isinstance(n, str) for n in entry):
            classes.append(list(entry))
        else:
            raise ConfigError(f"{path}: class {i} must be a string or list of strings")
    return classes


def _class_specs(classes: list[list[str]], expanded_path=None) -> list[ClassSpec]:
    specs = [ClassSpec(class_id=i, names=list(names)) for i, names in enumerate(classes)]
    if expanded_path:
        expanded = _read_json(expanded_path)
        if not isinstance(expanded, dict):
            raise ConfigError(f"{expanded_path}: expected a JSON object")
        for spec in specs:
            tokens = expanded.get(str(spec.class_id))
            if tokens is not None:
                spec.expanded = [str(t) for t in tokens]
    return specs


def _write_or_print(payload: dict, out_path) -> None:
    if out_path:
        write_json(out_path, payload)
    else:
        json.dump(payload, sys.stdout, sort_keys=True, indent=2, ensure_ascii=False)
        sys.stdout.write("\n")


def _cmd_expand(args) -> int:
    table = load_word_vectors(args.word_vectors)
    specs = _class_specs(_load_class_names(args.classes))
    config = ExpansionConfig(
        words_per_class=args.words_per_class,
        include_original_names=not args.no_original_names,
    )
    specs = expand_class_names(table, specs, config)
    _write_or_print({str(s.class_id): s.expanded for s in specs}, args.out)
    return 0


def _cmd_anchors_render(args) -> int:
    specs = _class_specs(_load_class_names(args.classes), args.expanded)
    template_texts = _read_json(args.templates)
    if not isinstance(template_texts, list) or not all(
        isinstance(t, str) for t in template_texts
    ):
        raise ConfigError(f"{args.templates}: expected a JSON array of template strings")
    templates = [Template(t) for t in template_texts]
    rendered = render_anchor_sentences(templates, specs)
    write_jsonl(
        args.out,
        (
            {"class_id": class_id, "sentence": sentence}
            for class_id in sorted(rendered)
            for sentence in rendered[class_id]
        ),
    )
    return 0


def _ids_for_rows(texts_path, n_rows: int) -> list[str]:
    if texts_path is None:
        return [str(i) for i in range(n_rows)]
    records = _read_jsonl(texts_path)
    if len(records) != n_rows:
        raise DataError(
            f"alignment error: {len(records)} text records but {n_rows} embedding rows"
        )
    ids = []
    for lineno, rec in enumerate(records, start=1):
        if "id" not in rec:
            raise DataError(f"{texts_path}:{lineno}: record missing 'id'")
        ids.append(str(rec["id"]))
    return ids


def _cmd_anchors_match(args) -> int:
    X = np.ascontiguousarray(load_embeddings(args.embeddings), dtype=np.float64)
    ids = _ids_for_rows(args.texts, X.shape[0])
    anchor_set = AnchorSet.from_embeddings(load_anchor_manifest(args.anchors))
    assignment = match_assign(X, anchor_set.anchor_vectors)
    write_jsonl(
        args.out,
        (
            {
                "id": ids[i],
                "label": int(assignment.labels[i]),
                "scores": [float(v) for v in assignment.scores[i]],
            }
            for i in range(X.shape[0])
        ),
    )
    return 0


def _cmd_pca(args) -> int:
    X = np.ascontiguousarray(load_embeddings(args.embeddings), dtype=np.float64)
    model = pca_fit(X, args.target_error, n_components=args.dims)
    save_embeddings(pca_transform(model, X), args.out)
    for extra_in, extra_out in args.also or []:
        extra = np.ascontiguousarray(load_embeddings(extra_in), dtype=np.float64)
        save_embeddings(pca_transform(model, extra), extra_out)
    print(f"kept {model.n_components} of {X.shape[1]} dimensions")
    return 0


def _labels_from_jsonl(path) -> np.ndarray:
    records = _read_jsonl(path)
    labels = np.empty(len(records), dtype=np.int64)
    for i, rec in enumerate(records):
        if "label" not in rec:
            raise DataError(f"{path}: record {i} missing 'label'")
        labels[i] = int(rec["label"])
    return labels


def _cmd_fit(args) -> int:
    X = np.ascontiguousarray(load_embeddings(args.embeddings), dtype=np.float64)
    labels = _labels_from_jsonl(args.init)
    n_classes = args.n_classes or int(labels.max()) + 1
    init = init_from_assignment(X, Assignment(labels=labels), n_classes)
    sigma_init = compute_sigma_init(X)
    priors = Priors.noninformative(X.shape[0], n_classes, sigma_init, alpha0=args.alpha0)
    config = FitConfig(
        max_iter=args.max_iter,
        label_change_tolerance=args.label_change_tolerance,
        seed=args.seed,
    )
    state, log = bgmm_fit(X, init, priors, config, args.cov)
    save_model(state, args.out)
    print(f"fitted {n_classes} components in {len(log)} iterations -> {args.out}")
    return 0


def _cmd_predict(args) -> int:
    state = load_model(args.model)
    X = np.ascontiguousarray(load_embeddings(args.embeddings), dtype=np.float64)
    ids = _ids_for_rows(args.texts, X.shape[0])
    assignment = predict(state, X)
    write_jsonl(
        args.out,
        (
            {
                "id": ids[i],
                "label": int(assignment.labels[i]),
                "max_responsibility": float(
                    assignment.scores[i, assignment.labels[i]]
                ),
            }
            for i in range(X.shape[0])
        ),
    )
    return 0


def _gold_by_id(texts_path, classes: list[list[str]]):
    first_names = [names[0] for names in classes]
    index = {name: i for i, name in enumerate(first_names)}
    gold = {}
    for lineno, rec in enumerate(_read_jsonl(texts_path), start=1):
        if "id" not in rec:
            raise DataError(f"{texts_path}:{lineno}: record missing 'id'")
        label = rec.get("label")
        if label is None:
            continue
        if label not in index:
            raise DataError(
                f"{texts_path}:{lineno}: unknown label {label!r} (classes: {first_names})"
            )
        gold[str(rec["id"])] = (index[label], rec.get("split", "train"))
    return gold


def _cmd_eval(args) -> int:
    classes = _load_class_names(args.classes)
    gold = _gold_by_id(args.texts, classes)
    pred_records = _read_jsonl(args.pred)
    pred_labels, gold_labels = [], []
    for i, rec in enumerate(pred_records):
        if "id" not in rec or "label" not in rec:
            raise DataError(f"{args.pred}: record {i} needs 'id' and 'label'")
        rec_id = str(rec["id"])
        if rec_id not in gold:
            raise DataError(f"{args.pred}: no gold label for id {rec_id!r}")
        label, split = gold[rec_id]
        if args.split != "all" and split != args.split:
            continue
        pred_labels.append(int(rec["label"]))
        gold_labels.append(label)
    if not pred_labels:
        raise DataError(f"no predictions matched split {args.split!r}")
    metrics = compute_metrics(
        np.asarray(pred_labels), np.asarray(gold_labels), len(classes)
    )
    _write_or_print(metrics.to_dict(), args.out)
    return 0


def _cmd_ablate(args) -> int:
    classes = _load_class_names(args.classes)
    dataset = load_dataset(
        args.texts, args.embeddings, classes=[names[0] for names in classes]
    )
    anchor_set = AnchorSet.from_embeddings(load_anchor_manifest(args.anchors))
    X = np.ascontiguousarray(dataset.embeddings, dtype=np.float64)
    sigma_init = compute_sigma_init(X)
    priors = Priors.noninformative(
        X.shape[0], len(classes), sigma_init, alpha0=args.alpha0
    )
    config = FitConfig(
        max_iter=args.max_iter,
        label_change_tolerance=args.label_change_tolerance,
        seed=args.seed,
    )
    algorithms = tuple(args.algorithms.split(",")) if args.algorithms else ABLATION_ALGORITHMS
    results = run_ablation(
        dataset, anchor_set.anchor_vectors, priors, config, algorithms, args.cov
    )
    header = f"{'algorithm':<10} {'accuracy':>9} {'micro_f1':>9} {'macro_f1':>9}"
    print(header)
    payload = {}
    for name, cell in results.items():
        if cell.metrics is None:
            print(f"{name:<10} error: {cell.error}")
            payload[name] = {"error": cell.error}
        else:
            m = cell.metrics
            print(f"{name:<10} {m.accuracy:>9.4f} {m.micro_f1:>9.4f} {m.macro_f1:>9.4f}")
            payload[name] = m.to_dict()
    if args.out:
        write_json(args.out, payload)
    return 0


def _cmd_unbalance(args) -> int:
    classes = _load_class_names(args.classes)
    class_names = [names[0] for names in classes]
    dataset = load_dataset(args.texts, args.embeddings, classes=class_names)
    ratios = args.ratio if args.ratio else list(DEFAULT_RATIO_GRID)
    for ratio in ratios:
        spec = UnbalanceSpec(target_class=args.target_class, keep_ratio=ratio, seed=args.seed)
        sub = subsample_unbalanced(dataset, spec)
        ratio_dir = os.path.join(args.out_dir, f"ratio_{ratio:g}")
        os.makedirs(ratio_dir, exist_ok=True)
        write_jsonl(
            os.path.join(ratio_dir, "texts.jsonl"),
            (
                {
                    "id": sub.ids[i],
                    **(
                        {"label": class_names[sub.gold_labels[i]]}
                        if sub.gold_labels is not None and sub.gold_labels[i] >= 0
                        else {}
                    ),
                    "split": str(sub.split_tag[i]),
                }
                for i in range(len(sub))
            ),
        )
        save_embeddings(sub.embeddings, os.path.join(ratio_dir, "embeddings.sptc"))
        print(f"ratio {ratio:g}: kept {len(sub)} of {len(dataset)} rows -> {ratio_dir}")
    return 0


def _cmd_pipeline(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    result = run_pipeline(config)
    if result.metrics is not None:
        m = result.metrics
        print(
            f"accuracy {m.accuracy:.4f}  micro_f1 {m.micro_f1:.4f}  "
            f"macro_f1 {m.macro_f1:.4f}  ({result.n_iterations} iterations)"
        )
    else:
        print(f"completed in {result.n_iterations} iterations (no gold labels to score)")
    print(f"artifacts in {result.output_dir}")
    return 0


def _cmd_project(args) -> int:
    dataset = load_dataset(args.texts, args.embeddings)
    X = np.ascontiguousarray(dataset.embeddings, dtype=np.float64)
    model = pca_fit(X, n_components=args.dims)
    pred = None
    if args.pred:
        pred_labels = _labels_from_jsonl(args.pred)
        if pred_labels.shape[0] != len(dataset):
            raise DataError(
                f"{args.pred} has {pred_labels.shape[0]} rows, dataset has {len(dataset)}"
            )
        pred = Assignment(labels=pred_labels)
    emit_projection(dataset, model, args.dims, args.out, pred=pred)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embmix",
        description="Zero-shot text classification by clustering sentence embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", help="expand class names with word-vector neighbors")
    p.add_argument("--word-vectors", required=True)
    p.add_argument("--classes", required=True, help="JSON array of class names")
    p.add_argument("--words-per-class", type=int, default=1000)
    p.add_argument("--no-original-names", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_expand)

    anchors = sub.add_parser("anchors", help="render anchor sentences / match embeddings")
    anchors_sub = anchors.add_subparsers(dest="anchors_command", required=True)

    p = anchors_sub.add_parser("render", help="fill templates with class tokens")
    p.add_argument("--classes", required=True)
    p.add_argument("--templates", required=True, help="JSON array of template strings")
    p.add_argument("--expanded", help="JSON map class_id -> token list")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_anchors_render)

    p = anchors_sub.add_parser("match", help="assign rows to nearest anchors by cosine")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--anchors", required=True, help="anchor manifest JSON")
    p.add_argument("--texts", help="JSONL records supplying row ids")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_anchors_match)

    p = sub.add_parser("pca", help="reduce embeddings by PCA")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--target-error", type=float, default=DEFAULT_TARGET_ERROR)
    p.add_argument("--dims", type=int, help="fixed component count override")
    p.add_argument(
        "--also",
        nargs=2,
        action="append",
        metavar=("IN", "OUT"),
        help="project another matrix with the same fitted model",
    )
    p.set_defaults(func=_cmd_pca)

    p = sub.add_parser("fit", help="fit the Bayesian mixture from an initial assignment")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--init", required=True, help="JSONL with per-row labels")
    p.add_argument("--n-classes", type=int)
    p.add_argument("--cov", choices=("full", "tied"), default="full")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--alpha0", type=float)
    p.add_argument("--label-change-tolerance", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="label rows with a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--texts", help="JSONL records supplying row ids")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="score predictions against gold labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--texts", required=True)
    p.add_argument("--classes", required=True)
    p.add_argument("--split", choices=("train", "test", "all"), default="test")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="compare clustering algorithms on one dataset")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--texts", required=True)
    p.add_argument("--classes", required=True)
    p.add_argument("--anchors", required=True)
    p.add_argument("--algorithms", help="comma-separated subset of kmeans,gmm,bgmm")
    p.add_argument("--cov", choices=("full", "tied"), default="full")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--alpha0", type=float)
    p.add_argument("--label-change-tolerance", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("unbalance", help="thin one class to a ratio (or a ratio sweep)")
    p.add_argument("--texts", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--classes", required=True)
    p.add_argument("--target-class", type=int, required=True)
    p.add_argument("--ratio", type=float, action="append")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_unbalance)

    p = sub.add_parser("pipeline", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("project", help="export 2-d or 3-d PCA coordinates for plotting")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--texts", required=True)
    p.add_argument("--dims", type=int, choices=(2, 3), required=True)
    p.add_argument("--pred", help="JSONL with per-row predicted labels")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_project)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EmbmixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
