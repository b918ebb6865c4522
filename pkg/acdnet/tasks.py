"""Tasks executed by the command line (or manually).

Every task receives validated settings, writes its artifacts atomically and
returns the text to print.
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import logging

import numpy as np

from acdnet import checkpoint as ckpt
from acdnet import ehr, evaluation, gradcheck, reports, training, utils
from acdnet import settings as acdnet_settings
from acdnet.decision_head import predict_set
from acdnet.exceptions import ConfigError, DatasetError
from acdnet.models import VariantChoices
from acdnet.network import ACDNet
from acdnet.optim import Adam

LOGGER = logging.getLogger(__name__)

SPLITS = ["train", "val", "test", "all"]
SWEEPS = {
    "lambda": ("train", "lambda", [0.90, 0.95, 0.97, 0.99]),
    "dim": ("encoder", "dim", [16, 32, 64]),
}
RANKED = 10


def atom_types(dataset, settings):
    """Atom vocabulary size covering both settings and the dataset molecules."""
    seen = [max(molecule.atom_types) + 1 for molecule in dataset.graphs.molecules if molecule.atom_types]
    return max([settings["data"]["atom_types"]] + seen)


def build_model(settings, dataset, variant="full"):
    """Return a freshly initialized model and its optimizer."""
    model = ACDNet(
        dataset.vocab,
        acdnet_settings.encoder_config(settings),
        variant,
        atom_types(dataset, settings),
        settings["seed"],
        acdnet_settings.numerics_config(settings),
    )
    return model, build_optimizer(model, settings)


def build_optimizer(model, settings):
    """Return Adam over the model parameters."""
    train = settings["train"]
    return Adam(
        model.params, train["lr"], train["beta1"], train["beta2"], settings["numerics"]["adam_eps"]
    )


def split_dataset(settings, dataset):
    """Return the train, val and test datasets (4:1:1 by patient)."""
    return ehr.split(dataset, seed=settings["seed"])


def train_and_evaluate(settings, dataset, variant="full", evaluate_on="test"):
    """Train variant on the train split, keep the best epoch, bootstrap evaluate."""
    train, val, test = split_dataset(settings, dataset)
    model, optimizer = build_model(settings, dataset, variant)
    constants = model.prepare(dataset.graphs)
    result = training.fit(
        model, optimizer, train.records, val.records, constants, acdnet_settings.train_config(settings)
    )
    if result.best_state is not None:
        model.params.load_state(result.best_state)
    target = test if evaluate_on == "test" else val
    eval_cfg = acdnet_settings.eval_config(settings)
    return evaluation.bootstrap_eval(
        model, target, eval_cfg, settings["seed"], settings["train"]["threshold"]
    )


def cmd_gen_data(settings, out_path):
    """Generate the synthetic corpus and print its statistics.

    The header keeps the settings without paths, so a seed always yields the
    same bytes.
    """
    dataset = ehr.generate_synthetic(acdnet_settings.gen_config(settings), settings["seed"])
    snapshot = {key: value for key, value in settings.items() if key != "paths"}
    ehr.save_dataset(out_path, dataset, snapshot)
    return reports.render_summary(ehr.summarize(dataset))


def cmd_train(settings, dataset_path, checkpoint_path, resume=None, log_path=None):
    """Train on the train split, selecting the best epoch by validation Jaccard.

    The best checkpoint is written on every improvement; the resumable
    checkpoint (<checkpoint>.last) after every epoch.
    """
    dataset = ehr.load_dataset(dataset_path)
    best = None
    start_epoch = 0
    if resume:
        model, restored = ckpt.load_checkpoint(resume)
        if restored.adam is None:
            raise DatasetError(f"{resume} holds no optimizer state, cannot resume")
        # Architecture and optimizer settings come from the checkpoint
        settings = utils.deep_merge(
            restored.header["settings"], {"train": {"epochs": settings["train"]["epochs"]}}
        )
        model.check_vocab(dataset.vocab)
        optimizer = build_optimizer(model, settings)
        optimizer.load_state(restored.adam)
        start_epoch = restored.header["epoch"]
        best = restored.header.get("best")
        LOGGER.info("resuming from %s at epoch %d", resume, start_epoch)
    else:
        model, optimizer = build_model(settings, dataset, settings_variant(settings))
    train, val = split_dataset(settings, dataset)[:2]
    cfg = acdnet_settings.train_config(settings)
    constants = model.prepare(dataset.graphs)
    logs = []
    state = {"best": best}

    def on_epoch(log, improved):
        logs.append(log)
        if improved:
            state["best"] = {"epoch": log.epoch, "jaccard": log.val_jaccard}
            ckpt.save_checkpoint(checkpoint_path, model, settings, log.epoch + 1, best=state["best"])
        ckpt.save_checkpoint(
            ckpt.last_path(checkpoint_path), model, settings, log.epoch + 1, optimizer, state["best"]
        )

    result = training.fit(
        model, optimizer, train.records, val.records, constants, cfg, start_epoch, best, on_epoch
    )
    if state["best"] is None:
        # No epoch ran: keep the initial parameters
        ckpt.save_checkpoint(checkpoint_path, model, settings, start_epoch)
    if log_path:
        reports.save_report(log_path, "train", settings, [log.as_record() for log in logs])
    lines = [
        f"epoch {log.epoch} loss {log.loss:.6f} val_jaccard "
        + ("n/a" if log.val_jaccard is None else f"{log.val_jaccard:.6f}")
        for log in logs
    ]
    if state["best"] is not None:
        lines.append(
            f"best epoch {state['best']['epoch']} val_jaccard {state['best']['jaccard']:.6f}"
        )
    LOGGER.debug("fit returned best epoch %d", result.best_epoch)
    return "\n".join(lines) + "\n"


def settings_variant(settings):
    """Variant trained by cmd_train: the first ablation variant, else full."""
    variants = settings["ablation"]["variants"]
    return variants[0] if variants else "full"


def select_split(settings, dataset, name):
    """Return the dataset part named by name."""
    if name not in SPLITS:
        raise ConfigError(f"unknown split {name}, choose from {SPLITS}")
    if name == "all":
        return dataset
    return dict(zip(["train", "val", "test"], split_dataset(settings, dataset)))[name]


def cmd_eval(settings, dataset_path, checkpoint_path=None, out_path=None, split="test", baseline=None):
    """Bootstrap evaluation of a checkpoint, or of a baseline, on a split."""
    dataset = ehr.load_dataset(dataset_path)
    part = select_split(settings, dataset, split)
    medications = dataset.vocab.medications
    if baseline == "random":
        scorer = evaluation.random_baseline(settings["seed"], medications)
        title = "Random baseline"
    elif baseline == "most_frequent_k":
        train = select_split(settings, dataset, "train")
        scorer = evaluation.frequency_baseline(train.records, medications)
        title = "Most frequent k baseline"
    elif baseline is None:
        model, restored = ckpt.load_checkpoint(checkpoint_path)
        model.check_vocab(dataset.vocab)
        scorer = evaluation.model_scorer(model, model.prepare(dataset.graphs))
        title = f"{VariantChoices.label(restored.header['variant'])} on {split}"
    else:
        raise ConfigError(f"unknown baseline {baseline}")
    eval_cfg = acdnet_settings.eval_config(settings)
    predictions = evaluation.predict_visits(scorer, part.records, eval_cfg.workers)
    report = evaluation.bootstrap_report(
        predictions,
        dataset.graphs.ddi_adj,
        eval_cfg.rounds,
        eval_cfg.fraction,
        settings["seed"],
        settings["train"]["threshold"],
        eval_cfg.top_k,
    )
    if out_path:
        reports.save_report(out_path, "eval", settings, report.as_records())
    return reports.render_metrics(report, title)


def ablation_variants(settings, variants=None):
    """Selected variants, full model first."""
    selected = list(variants or settings["ablation"]["variants"] or VariantChoices.values())
    for variant in selected:
        if variant not in VariantChoices.values():
            raise ConfigError(f"unknown variant {variant}, choose from {VariantChoices.values()}")
    return ["full"] + [variant for variant in dict.fromkeys(selected) if variant != "full"]


def cmd_ablate(settings, dataset_path, variants=None, out_path=None):
    """Train and test every variant under the shared seed."""
    dataset = ehr.load_dataset(dataset_path)
    rows = []
    for variant in ablation_variants(settings, variants):
        LOGGER.info("ablation: training %s", variant)
        rows.append((variant, train_and_evaluate(settings, dataset, variant)))
    if out_path:
        records = [
            dict(record, variant=variant) for variant, report in rows for record in report.as_records()
        ]
        reports.save_report(out_path, "ablate", settings, records)
    return reports.render_ablation(rows)


def cmd_sweep(settings, dataset_path, parameter="lambda", values=None, out_path=None):
    """Train per value of lambda or dim and report validation metrics."""
    if parameter not in SWEEPS:
        raise ConfigError(f"unknown sweep {parameter}, choose from {sorted(SWEEPS)}")
    section, key, defaults = SWEEPS[parameter]
    dataset = ehr.load_dataset(dataset_path)
    rows = []
    for value in values or defaults:
        swept = acdnet_settings.validate_settings(
            utils.deep_merge(settings, {section: {key: value}})
        )
        LOGGER.info("sweep: training with %s = %s", parameter, value)
        rows.append((f"{parameter}={value}", train_and_evaluate(swept, dataset, evaluate_on="val")))
    if out_path:
        records = [
            dict(record, value=name.split("=", 1)[1])
            for name, report in rows
            for record in report.as_records()
        ]
        reports.save_report(out_path, "sweep", settings, records)
    return reports.render_comparison(rows, parameter, ("jaccard", "prauc", "f1"))


def recommend(scorer, patient, threshold=0.5, ranked=RANKED):
    """Return one record per visit: recommendation, ranking and partition.

    The partition is left out (None) for visits without recorded medications.
    """
    visits = []
    for until in range(1, len(patient.visits) + 1):
        scores = scorer(patient.history(until))
        predicted = predict_set(scores, threshold)
        ranking = np.argsort(-scores, kind="stable")[: min(ranked, scores.size)].tolist()
        visit = {
            "patient": patient.patient_id,
            "visit": until,
            "predicted": sorted(predicted),
            "ranking": [{"code": code, "score": float(scores[code])} for code in ranking],
            "correct": None,
            "unseen": None,
            "missed": None,
        }
        truth = patient.visits[until - 1].medications
        if truth:
            visit.update(evaluation.partition(predicted, truth))
        visits.append(visit)
    return visits


def _labelled(visit, vocab):
    view = dict(visit)
    view["ranking"] = [
        {"label": vocab.label("medications", item["code"]), "score": item["score"]}
        for item in visit["ranking"]
    ]
    for key in ["predicted", "correct", "unseen", "missed"]:
        if visit[key] is not None:
            view[key] = [vocab.label("medications", code) for code in visit[key]]
    return view


def cmd_predict(settings, checkpoint_path, patients_path, dataset_path, out_path=None):
    """Recommend medications for every visit of every patient in a file.

    The dataset supplies the knowledge graphs and the code labels.
    """
    model = ckpt.load_checkpoint(checkpoint_path)[0]
    dataset = ehr.load_dataset(dataset_path)
    model.check_vocab(dataset.vocab)
    patients = ehr.load_patients(patients_path, model.vocab)
    scorer = evaluation.model_scorer(model, model.prepare(dataset.graphs))
    threshold = settings["train"]["threshold"]
    visits = []
    text = []
    for patient in patients:
        records = recommend(scorer, patient, threshold)
        visits.extend(records)
        text.append(
            reports.render_prediction(
                patient.patient_id, [_labelled(visit, dataset.vocab) for visit in records]
            )
        )
    if out_path:
        reports.save_predictions(out_path, settings, visits)
    return "".join(text)


def cmd_gradcheck(settings, corrupt=None, out_path=None):
    """Run the gradient suite; return (report, text)."""
    report = gradcheck.run_gradcheck(settings["seed"], corrupt)
    if out_path:
        records = [
            {
                "kind": "check",
                "suite": result.suite,
                "name": result.name,
                "error": result.error,
                "threshold": result.threshold,
                "passed": result.passed,
            }
            for result in report.results
        ]
        reports.save_report(out_path, "gradcheck", settings, records)
    return report, reports.render_gradcheck(report)
