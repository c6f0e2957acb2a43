"""End-to-end orchestration: files in, files out.

Each ``run_*`` function backs one CLI subcommand.  All JSON written here
is sorted and newline-terminated so reruns with the same configuration
and seed are byte-identical, and encode parallelism only distributes
per-(segment, channel) work whose results are assembled in a fixed order.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor

from .baseline import CentroidModel, train_centroid_model
from .config import PipelineConfig
from .depth_io import (
    DepthSequence,
    DynamicImage,
    load_depth_sequence,
    load_dynamic_image,
    save_dynamic_image,
)
from .errors import (
    DepthPoolError,
    MissingPathError,
    MissingScoresError,
)
from .fusion_eval import (
    NO_LABEL,
    PredictionRecord,
    jaccard_sequence,
    labels_from_segments,
    mean_jaccard,
    product_fuse,
    recognition_rate,
)
from .representations import build_ddi, build_ddmni, build_ddni
from .segmentation import (
    ActionSegment,
    SegmentationModel,
    fit_segmentation_model,
    levenshtein_segmentation_score,
    qom_profile,
    segment_actions,
)

REP_ORDER = ("ddi", "ddni", "ddmni")
DIRECTIONS = ("fwd", "bwd")

SEGMENTS_FILE = "segments.json"
MODEL_FILE = "segmentation_model.json"
MANIFEST_FILE = "manifest.json"
PREDICTIONS_FILE = "predictions.json"
METRICS_FILE = "metrics.json"


def write_json(payload, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_json(path: str):
    if not os.path.isfile(path):
        raise MissingPathError(f"no such file: {path}")
    with open(path) as fh:
        return json.load(fh)


def segments_to_json(segments: list[ActionSegment]) -> list[dict]:
    return [{"start": s.start, "end": s.end, "label": s.label} for s in segments]


def segments_from_json(payload) -> list[ActionSegment]:
    if not isinstance(payload, list):
        raise DepthPoolError("segments JSON must be a list of objects")
    out = []
    for item in payload:
        label = item.get("label")
        out.append(
            ActionSegment(
                start=int(item["start"]),
                end=int(item["end"]),
                label=None if label is None else int(label),
            )
        )
    return out


def load_segments(path: str) -> list[ActionSegment]:
    return segments_from_json(read_json(path))


def segment_id(index: int) -> str:
    """1-based stable identifier used in manifests and image names."""
    return f"seg_{index:04d}"


def score_channels(reps) -> list[str]:
    """Score channel names for the enabled representations, fusion-ordered."""
    return [f"{rep}_{d}" for rep in REP_ORDER if rep in reps for d in DIRECTIONS]


# ---------------------------------------------------------------------------
# segment


def fit_from_spec(spec_path: str, config: PipelineConfig) -> SegmentationModel:
    """Fit the segmentation statistics from a JSON list of labeled streams.

    The file holds [{"input": <stream>, "segments": <json>}, ...].
    """
    spec = read_json(spec_path)
    if not isinstance(spec, list) or not spec:
        raise DepthPoolError(f"{spec_path}: expected a non-empty list of stream entries")
    base = os.path.dirname(os.path.abspath(spec_path))
    training = []
    for entry in spec:
        input_path = os.path.join(base, entry["input"])
        segments_path = os.path.join(base, entry["segments"])
        seq = load_depth_sequence(input_path, entry.get("format", "auto"))
        training.append((seq, load_segments(segments_path)))
    return fit_segmentation_model(training, config.qom)


def model_to_json(model: SegmentationModel) -> dict:
    return {"avg_length_l": model.avg_length_l, "threshold_inter": model.threshold_inter}


def load_segmentation_model(path: str) -> SegmentationModel:
    payload = read_json(path)
    return SegmentationModel(
        avg_length_l=float(payload["avg_length_l"]),
        threshold_inter=float(payload["threshold_inter"]),
    )


def run_segment(
    input_path: str,
    model: SegmentationModel,
    config: PipelineConfig,
    out_dir: str,
    fmt: str = "auto",
    figures: bool = False,
) -> list[ActionSegment]:
    """Detect action segments of one stream and write segments.json."""
    seq = load_depth_sequence(input_path, fmt)
    segments = segment_actions(seq, model, config.qom)
    os.makedirs(out_dir, exist_ok=True)
    write_json(segments_to_json(segments), os.path.join(out_dir, SEGMENTS_FILE))
    if figures:
        from . import report

        profile = qom_profile(seq, config.qom.threshold_qom)
        report.render_qom_profile(
            profile,
            model.threshold_inter,
            [s.start for s in segments] + [segments[-1].end],
            os.path.join(out_dir, "qom_profile.png"),
        )
    return segments


# ---------------------------------------------------------------------------
# encode


def _build_channel(rep: str, seq: DepthSequence, config: PipelineConfig):
    if rep == "ddi":
        return build_ddi(seq, config.hierarchy, config.pool)
    if rep == "ddni":
        return build_ddni(seq, config.background, config.hierarchy, config.pool)
    if rep == "ddmni":
        return build_ddmni(seq, config.gmm, config.hierarchy, config.pool)
    raise ValueError(f"unknown representation {rep!r}")


def _error_tag(exc: DepthPoolError) -> str:
    name = type(exc).__name__
    return name[: -len("Error")] if name.endswith("Error") else name


def run_encode(
    input_path: str,
    segments_path: str,
    config: PipelineConfig,
    out_dir: str,
    fmt: str = "auto",
) -> dict:
    """Encode every segment of a stream into dynamic image PNGs.

    A representation that fails on one segment is recorded under that
    segment's ``errors`` and the rest of the batch still encodes.
    Returns the manifest, which is also written to out_dir.
    """
    seq = load_depth_sequence(input_path, fmt)
    segments = load_segments(segments_path)
    reps = [rep for rep in REP_ORDER if rep in config.channels]
    os.makedirs(out_dir, exist_ok=True)

    def encode_one(index: int, rep: str):
        sub = seq.slice(segments[index].start, segments[index].end)
        sid = segment_id(index + 1)
        try:
            fwd, bwd = _build_channel(rep, sub, config)
        except DepthPoolError as exc:
            return {"error": _error_tag(exc)}
        names = {}
        for direction, image in (("fwd", fwd), ("bwd", bwd)):
            name = f"{sid}_{rep}_{direction}.png"
            save_dynamic_image(image, os.path.join(out_dir, name))
            names[f"{rep}_{direction}"] = name
        return {"images": names}

    tasks = [(i, rep) for i in range(len(segments)) for rep in reps]
    results = {}
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            futures = {key: pool.submit(encode_one, *key) for key in tasks}
        results = {key: fut.result() for key, fut in futures.items()}
    else:
        results = {key: encode_one(*key) for key in tasks}

    manifest_segments = []
    for i, seg in enumerate(segments):
        images: dict[str, str] = {}
        errors: dict[str, str] = {}
        for rep in reps:
            outcome = results[(i, rep)]
            if "error" in outcome:
                errors[rep] = outcome["error"]
            else:
                images.update(outcome["images"])
        manifest_segments.append(
            {
                "id": segment_id(i + 1),
                "start": seg.start,
                "end": seg.end,
                "label": seg.label,
                "images": images,
                "errors": errors,
            }
        )
    manifest = {
        "source": input_path,
        "width": seq.width,
        "height": seq.height,
        "frames": len(seq),
        "channels": reps,
        "seed": config.seed,
        "segments": manifest_segments,
    }
    write_json(manifest, os.path.join(out_dir, MANIFEST_FILE))
    return manifest


# ---------------------------------------------------------------------------
# train / classify


def _labeled_images(manifest_path: str, labels: dict | None):
    manifest = read_json(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    for seg in manifest["segments"]:
        label = labels.get(seg["id"]) if labels else seg.get("label")
        if label is None:
            continue
        for channel, name in seg["images"].items():
            yield channel, int(label), os.path.join(base, name)


def run_train_baseline(
    manifest_paths: list[str],
    config: PipelineConfig,
    out_path: str,
    labels_path: str | None = None,
) -> CentroidModel:
    """Average labeled training images into per-channel class centroids.

    Labels come from each manifest's segments; a labels JSON file mapping
    segment id to class overrides them (ids apply across all manifests).
    """
    labels = read_json(labels_path) if labels_path else None
    wanted = set(score_channels(config.channels))
    examples: dict[str, list[tuple[int, DynamicImage]]] = {}
    for path in manifest_paths:
        for channel, label, image_path in _labeled_images(path, labels):
            if channel in wanted:
                examples.setdefault(channel, []).append(
                    (label, load_dynamic_image(image_path))
                )
    model = train_centroid_model(examples, config.baseline.downsample)
    model.save(out_path)
    return model


def _external_scores(path: str) -> dict:
    payload = read_json(path)
    if not isinstance(payload, list):
        raise DepthPoolError(f"{path}: expected a list of score records")
    table = {}
    for rec in payload:
        table[(rec["segment_id"], rec["channel"])] = [float(v) for v in rec["scores"]]
    return table


def run_classify(
    manifest_path: str,
    config: PipelineConfig,
    out_path: str,
    model: CentroidModel | None = None,
    scores_path: str | None = None,
) -> dict:
    """Score and fuse every segment of a manifest into predicted labels.

    Exactly one of ``model`` and ``scores_path`` must be given.  External
    scores are positional: entry i is the score of class id i.
    """
    if (model is None) == (scores_path is None):
        raise ValueError("give either a centroid model or an external scores file")
    manifest = read_json(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    reps = [r for r in manifest["channels"] if r in config.channels]
    if not reps:
        raise MissingScoresError("no enabled channel appears in the manifest")
    external = _external_scores(scores_path) if scores_path else None

    predicted = []
    for seg in manifest["segments"]:
        vectors = []
        for rep in reps:
            for direction in DIRECTIONS:
                channel = f"{rep}_{direction}"
                if external is not None:
                    key = (seg["id"], channel)
                    if key not in external:
                        raise MissingScoresError(
                            f"no scores for segment {seg['id']} channel {channel}"
                        )
                    vectors.append(external[key])
                else:
                    if channel not in seg["images"]:
                        # this representation failed at encode time; its
                        # pair is absent as a whole, so skip the pair
                        continue
                    if channel not in model.centroids:
                        raise MissingScoresError(f"model has no channel {channel}")
                    image = load_dynamic_image(os.path.join(base, seg["images"][channel]))
                    vectors.append(model.score(channel, image))
        if not vectors:
            raise MissingScoresError(f"segment {seg['id']} has no scorable channel")
        index, fused = product_fuse(vectors)
        label = model.classes[index] if model is not None else index
        predicted.append(
            {
                "segment_id": seg["id"],
                "start": seg["start"],
                "end": seg["end"],
                "label": label,
                "truth_label": seg.get("label"),
                "fused": [float(v) for v in fused],
            }
        )
    predictions = {
        "manifest": os.path.basename(manifest_path),
        "channels": score_channels(reps),
        "segments": predicted,
    }
    write_json(predictions, out_path)
    return predictions


# ---------------------------------------------------------------------------
# eval


def _predicted_segments(predictions: dict) -> list[ActionSegment]:
    return [
        ActionSegment(int(s["start"]), int(s["end"]), int(s["label"]))
        for s in predictions["segments"]
    ]


def match_records(
    predicted: list[ActionSegment], truth: list[ActionSegment]
) -> list[PredictionRecord]:
    """Pair every truth segment with its maximum-overlap prediction."""
    records = []
    for t in truth:
        best_overlap = 0
        best_label = NO_LABEL
        for p in sorted(predicted, key=lambda s: s.start):
            overlap = min(t.end, p.end) - max(t.start, p.start) + 1
            if overlap > best_overlap:
                best_overlap = overlap
                best_label = p.label if p.label is not None else NO_LABEL
        truth_label = t.label if t.label is not None else NO_LABEL
        records.append(PredictionRecord(predicted=best_label, truth=truth_label))
    return records


def evaluate_pair(
    predictions: dict, truth: list[ActionSegment], frames: int | None = None
) -> dict:
    """Per-sequence metrics of one predictions/truth pair."""
    predicted = _predicted_segments(predictions)
    length = max(
        [s.end for s in predicted] + [s.end for s in truth] + ([frames] if frames else [])
    )
    truth_labels = labels_from_segments(truth, length)
    pred_labels = labels_from_segments(predicted, length)
    records = match_records(predicted, truth)
    return {
        "jaccard": jaccard_sequence(truth_labels, pred_labels),
        "levenshtein": levenshtein_segmentation_score(
            sorted(predicted, key=lambda s: s.start), sorted(truth, key=lambda s: s.start)
        ),
        "records": [[r.predicted, r.truth] for r in records],
        "n_predicted": len(predicted),
        "n_truth": len(truth),
    }


def run_eval(
    pairs: list[tuple[str, str, str]],
    out_dir: str,
    frames: int | None = None,
    figures: bool = True,
) -> dict:
    """Evaluate (name, predictions path, truth path) pairs; write the report.

    Writes metrics.json plus CSV tables, and unless disabled, the metric
    figures, all into out_dir.
    """
    if not pairs:
        raise DepthPoolError("nothing to evaluate")
    per_sequence = []
    all_records: list[PredictionRecord] = []
    for name, pred_path, truth_path in pairs:
        predictions = read_json(pred_path)
        truth = load_segments(truth_path)
        row = evaluate_pair(predictions, truth, frames)
        row["name"] = name
        per_sequence.append(row)
        all_records.extend(PredictionRecord(p, t) for p, t in row["records"])
    metrics = {
        "recognition_rate": recognition_rate(all_records),
        "mean_jaccard": mean_jaccard([row["jaccard"] for row in per_sequence]),
        "mean_levenshtein": float(
            sum(row["levenshtein"] for row in per_sequence) / len(per_sequence)
        ),
        "per_sequence": per_sequence,
    }
    os.makedirs(out_dir, exist_ok=True)
    write_json(metrics, os.path.join(out_dir, METRICS_FILE))

    from . import report

    report.write_metrics_csv(metrics, os.path.join(out_dir, "metrics.csv"))
    report.write_records_csv(metrics, os.path.join(out_dir, "records.csv"))
    if figures:
        report.render_jaccard_figure(metrics, os.path.join(out_dir, "jaccard_per_sequence.png"))
        report.render_confusion_figure(all_records, os.path.join(out_dir, "confusion_matrix.png"))
    return metrics


def run_classify_fuse_eval(
    manifest_path: str,
    truth_path: str,
    config: PipelineConfig,
    out_dir: str,
    model: CentroidModel | None = None,
    scores_path: str | None = None,
    figures: bool = True,
) -> dict:
    """Classify one manifest and evaluate it against truth segments."""
    os.makedirs(out_dir, exist_ok=True)
    pred_path = os.path.join(out_dir, PREDICTIONS_FILE)
    run_classify(manifest_path, config, pred_path, model=model, scores_path=scores_path)
    name = os.path.splitext(os.path.basename(manifest_path))[0]
    return run_eval([(name, pred_path, truth_path)], out_dir, figures=figures)
