"""Stream evaluation loop: predict with the current state, then adapt.

The ordering is normative: the prediction for sample t is made before the
state has seen sample t. Reports are plain key=value text so two runs with
the same inputs diff clean; wall time is kept out of the formatted report
for that reason.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .online_em import adapt_step
from .oracle import BatchEMResult, batch_em
from .predictor import fused_predict
from .state import AdaptConfig, ClassTextEmbeddings, MixtureState, init_state, unit_normalize

CSV_COLUMNS = "index,label,prediction,entropy,weight,top_cosine"


@dataclass
class RunReport:
    """Aggregate metrics for one pass over a stream.

    Accuracies are over labeled, non-skipped records and 0 when there are
    none; mean_sample_weight averages the confidence weight over every
    predicted sample.
    """

    total: int
    correct_fused: int
    correct_zero_shot: int
    skipped: int
    top1_fused: float
    top1_zero_shot: float
    mean_sample_weight: float
    wall_time: float
    config_echo: AdaptConfig


def run_stream(
    text_embeddings: ClassTextEmbeddings,
    records,
    config: AdaptConfig,
    csv_sink=None,
    update_means: bool = True,
    update_covariance: bool = True,
    state: MixtureState | None = None,
):
    """Process records in order; returns (RunReport, final MixtureState)."""
    started = time.perf_counter()
    if state is None:
        state = init_state(text_embeddings, config)
    text = text_embeddings
    if config.normalize_features:
        text = ClassTextEmbeddings(
            embeddings=unit_normalize(text_embeddings.embeddings),
            class_names=text_embeddings.class_names,
        )

    if csv_sink is not None:
        csv_sink.write(CSV_COLUMNS + "\n")

    total = skipped = labeled = correct_fused = correct_zero_shot = 0
    weight_sum = 0.0
    for index, rec in enumerate(records):
        total += 1
        x = np.asarray(rec.feature, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            skipped += 1
            if csv_sink is not None:
                label = "" if rec.label is None else rec.label
                csv_sink.write(f"{index},{label},,,,\n")
            continue
        if config.normalize_features:
            x = unit_normalize(x)

        outcome = fused_predict(state, x, text, config)
        weight_sum += outcome.sample_weight
        if rec.label is not None:
            labeled += 1
            if outcome.predicted_class == rec.label:
                correct_fused += 1
            if int(np.argmax(outcome.zero_shot_probs)) == rec.label:
                correct_zero_shot += 1

        if config.adaptation_enabled:
            adapt_step(
                state,
                x,
                outcome.zero_shot_probs,
                config,
                update_means=update_means,
                update_covariance=update_covariance,
            )

        if csv_sink is not None:
            label = "" if rec.label is None else rec.label
            top_cos = float(text.embeddings[outcome.predicted_class] @ x)
            csv_sink.write(
                f"{index},{label},{outcome.predicted_class},"
                f"{outcome.self_entropy:.12g},{outcome.sample_weight:.12g},"
                f"{top_cos:.12g}\n"
            )

    predicted = total - skipped
    report = RunReport(
        total=total,
        correct_fused=correct_fused,
        correct_zero_shot=correct_zero_shot,
        skipped=skipped,
        top1_fused=correct_fused / labeled if labeled else 0.0,
        top1_zero_shot=correct_zero_shot / labeled if labeled else 0.0,
        mean_sample_weight=weight_sum / predicted if predicted else 0.0,
        wall_time=time.perf_counter() - started,
        config_echo=config,
    )
    return report, state


def format_report(report: RunReport) -> str:
    cfg = report.config_echo
    lines = [
        f"total={report.total}",
        f"skipped={report.skipped}",
        f"correct_fused={report.correct_fused}",
        f"correct_zero_shot={report.correct_zero_shot}",
        f"top1_fused={report.top1_fused:.6f}",
        f"top1_zero_shot={report.top1_zero_shot:.6f}",
        f"mean_sample_weight={report.mean_sample_weight:.12g}",
        f"config.alpha={cfg.alpha:g}",
        f"config.beta={cfg.beta:g}",
        f"config.zero_shot_temperature={cfg.zero_shot_temperature:g}",
        f"config.regularization_epsilon={cfg.regularization_epsilon:g}",
        f"config.refactor_interval={cfg.refactor_interval}",
        f"config.normalize_features={str(cfg.normalize_features).lower()}",
        f"config.adaptation_enabled={str(cfg.adaptation_enabled).lower()}",
    ]
    return "\n".join(lines) + "\n"


ABLATION_ROWS = (
    ("full", dict()),
    ("frozen_means", dict(update_means=False)),
    ("frozen_covariance", dict(update_covariance=False)),
    ("no_entropy_weighting", dict(beta=0.0)),
)


def run_ablation(open_records, config: AdaptConfig):
    """Run the standard ablation grid; ``open_records`` yields a fresh
    (text_embeddings, records) pair per call so each row sees the same stream."""
    results = []
    for name, tweaks in ABLATION_ROWS:
        row_config = replace(config, beta=tweaks["beta"]) if "beta" in tweaks else config
        text, records = open_records()
        report, _ = run_stream(
            text,
            records,
            row_config,
            update_means=tweaks.get("update_means", True),
            update_covariance=tweaks.get("update_covariance", True),
        )
        results.append((name, report))
    return results


def format_ablation(results) -> str:
    width = max(len(name) for name, _ in results)
    lines = [f"{'variant'.ljust(width)}  top1_fused  top1_zero_shot"]
    for name, report in results:
        lines.append(
            f"{name.ljust(width)}  {report.top1_fused:.6f}    {report.top1_zero_shot:.6f}"
        )
    return "\n".join(lines) + "\n"


@dataclass
class OracleComparison:
    batch: BatchEMResult
    online_state: MixtureState
    mean_distances: np.ndarray
    covariance_frobenius: float
    prior_l1: float


def run_oracle(text_embeddings: ClassTextEmbeddings, records, config: AdaptConfig):
    """Run batch EM to convergence and the online engine on the same data."""
    records = list(records)
    features = np.array(
        [np.asarray(r.feature, dtype=np.float64) for r in records]
    ).reshape(len(records), -1)
    finite = np.all(np.isfinite(features), axis=1)
    features = features[finite]
    if config.normalize_features:
        features = unit_normalize(features)
        init_means = unit_normalize(text_embeddings.embeddings)
    else:
        init_means = np.asarray(text_embeddings.embeddings, dtype=np.float64)

    batch = batch_em(features, init_means)
    _, state = run_stream(text_embeddings, records, config)

    return OracleComparison(
        batch=batch,
        online_state=state,
        mean_distances=np.linalg.norm(state.means - batch.means, axis=1),
        covariance_frobenius=float(np.linalg.norm(state.covariance - batch.covariance)),
        prior_l1=float(np.abs(state.priors - batch.priors).sum()),
    )


def format_oracle(result: OracleComparison) -> str:
    batch = result.batch
    lines = [
        f"batch_converged={str(batch.converged).lower()}",
        f"batch_iterations={batch.iterations}",
        f"batch_log_likelihood={batch.log_likelihood:.12g}",
        f"prior_l1_distance={result.prior_l1:.12g}",
        f"covariance_frobenius_distance={result.covariance_frobenius:.12g}",
    ]
    for y, dist in enumerate(result.mean_distances):
        lines.append(f"mean_distance[{y}]={dist:.12g}")
    for y, p in enumerate(batch.priors):
        lines.append(f"batch_prior[{y}]={p:.12g}")
    if batch.means.shape[1] <= 8:
        for y, row in enumerate(batch.means):
            vals = ",".join(f"{v:.12g}" for v in row)
            lines.append(f"batch_mean[{y}]={vals}")
    return "\n".join(lines) + "\n"
