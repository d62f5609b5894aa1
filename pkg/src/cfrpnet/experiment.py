"""End-to-end experiment harness.

Runs the full model roster (gradient-trained net, swarm-trained nets, and
closed-form empirical baselines) on one shared seeded split, generates
synthetic databases with a known ground truth, sweeps single inputs, and
emits every report file as plain CSV/JSON. No plotting here, only the
data behind the plots.
"""
from __future__ import annotations

import dataclasses
import json
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import mechanics
from .dataset import (
    DEFAULT_FEATURES,
    FIELD_BOUNDS,
    FIELDS,
    TARGET_FIELD,
    SpecimenRecord,
    feature_matrix,
    fit_normalizer,
    parse_dataset,
    split,
    target_vector,
)
from .mechanics import EmpiricalModelParams
from .metrics import EvaluationReport, report_from_pairs
from .neuralnet import (
    BackpropConfig,
    NetworkTopology,
    TrainedModel,
    load_model,
    save_model,
    train_backprop,
)
from .optimizers import BaConfig, GwoConfig, PsoConfig, trace_csv, train_hybrid

SWARM_MODELS = ("pso", "gwo", "ba")
TRAINABLE_MODELS = ("ann",) + SWARM_MODELS
EMPIRICAL_MODELS = mechanics.EMPIRICAL_MODELS
ALL_MODELS = TRAINABLE_MODELS + EMPIRICAL_MODELS
SWEEP_VARIABLES = ("fco", "d", "ef", "nt")

# Half-width of the weight search box; matches the gradient baseline's
# uniform initialization so all trainers explore the same space.
WEIGHT_BOUND = 0.5


def model_seed(master_seed: int, name: str) -> int:
    """Per-model seed derived from the master seed and the model name."""
    ss = np.random.SeedSequence([int(master_seed), zlib.crc32(name.encode("ascii"))])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class SynthParams:
    """Knobs of the synthetic database generator.

    ``fiber_strain`` is the uniform sampling range of the fiber ultimate
    tensile strain. The synthetic confined strain exceeds the unconfined
    strain by ``strain_per_pressure`` times the lateral pressure the
    jacket would exert at ``nominal_fiber_strain``; this surrogate is
    strictly increasing in the confinement stiffness ratio and exists only
    so the full seven-feature input contract stays exercisable. It is a
    data-generation device, not a mechanics claim.
    """

    fiber_strain: tuple[float, float] = (0.0135, 0.0165)
    nominal_fiber_strain: float = 0.015
    strain_per_pressure: float = 0.0004  # dimensionless strain per MPa
    max_attempts_per_record: int = 10_000


def synth_dataset(
    n: int,
    seed: int,
    noise_fraction: float = 0.02,
    params: SynthParams | None = None,
) -> list[SpecimenRecord]:
    """Generate a synthetic specimen database with a known ground truth.

    Geometry, jacket, and concrete properties are sampled uniformly within
    the reference bounds (height pinned at twice the diameter). Each record
    carries its sampled hoop rupture strain, and the label is the Lam-Teng
    strength for that rupture strain, perturbed by multiplicative Gaussian
    noise of the given fraction. Candidate records whose derived label or
    confined strain leave the reference bounds are resampled, so every
    emitted field stays in range.
    """
    if n < 10:
        raise ValueError("synthetic datasets need n >= 10")
    if noise_fraction < 0.0:
        raise ValueError("noise_fraction must be >= 0")
    p = params or SynthParams()
    lo_f, hi_f = p.fiber_strain
    if not 0.0 < lo_f < hi_f:
        raise ValueError("fiber_strain must be an increasing positive pair")
    if p.nominal_fiber_strain <= 0.0 or p.strain_per_pressure <= 0.0:
        raise ValueError("nominal_fiber_strain and strain_per_pressure must be positive")
    rng = np.random.default_rng(seed)
    fcc_lo, fcc_hi = FIELD_BOUNDS["fcc"]
    ecc_lo, ecc_hi = FIELD_BOUNDS["ecc"]

    records: list[SpecimenRecord] = []
    for _ in range(n):
        for _attempt in range(p.max_attempts_per_record):
            d = rng.uniform(*FIELD_BOUNDS["d"])
            nt = rng.uniform(*FIELD_BOUNDS["nt"])
            ef = rng.uniform(*FIELD_BOUNDS["ef"])
            fco = rng.uniform(*FIELD_BOUNDS["fco"])
            eco_pct = rng.uniform(*FIELD_BOUNDS["eco"])
            eps_f = rng.uniform(lo_f, hi_f)
            noise = rng.standard_normal()

            eps_h = mechanics.hoop_rupture_strain(eps_f, fco)
            f_l = mechanics.confinement_stress(ef * 1000.0, eps_h, nt, d)
            eps_h_nom = mechanics.hoop_rupture_strain(p.nominal_fiber_strain, fco)
            f_l_nom = mechanics.confinement_stress(ef * 1000.0, eps_h_nom, nt, d)
            ecc_pct = eco_pct + 100.0 * p.strain_per_pressure * f_l_nom
            fcc = mechanics.lam_teng(fco, f_l) * (1.0 + noise_fraction * noise)
            if fcc_lo <= fcc <= fcc_hi and ecc_lo <= ecc_pct <= ecc_hi:
                records.append(SpecimenRecord(d=d, h=2.0 * d, nt=nt, ef=ef, fco=fco,
                                              eco=eco_pct, ecc=ecc_pct, fcc=fcc,
                                              eps_h_rup=eps_h))
                break
        else:
            raise RuntimeError("synthetic sampler failed to draw an in-range record")
    return records


@dataclass
class SynthSpec:
    """Synthetic-data request inside an experiment config."""

    n: int = 708
    noise_fraction: float = 0.02
    seed: int | None = None  # None means: use the experiment master seed
    params: SynthParams = SynthParams()


@dataclass
class ExperimentConfig:
    """Configuration for a full comparison run.

    Exactly one data source is used: an explicit records argument to
    run_experiment, else ``dataset`` (CSV path), else ``synth``.
    ``fiber_strain`` is the fallback fiber ultimate strain from which the
    empirical baselines derive rupture strains when records carry none.
    """

    dataset: str | None = None
    synth: SynthSpec | None = None
    features: tuple[str, ...] = DEFAULT_FEATURES
    roster: tuple[str, ...] = ("ann", "pso", "gwo", "ba", "lam_teng", "miyauchi")
    train_fraction: float = 0.75
    seed: int = 0
    out_dir: str | None = None
    hidden_neurons: int = 50
    hidden_activation: str = "tanh"
    output_activation: str = "linear"
    pso: PsoConfig = field(default_factory=PsoConfig)
    gwo: GwoConfig = field(default_factory=GwoConfig)
    ba: BaConfig = field(default_factory=BaConfig)
    ann: BackpropConfig = field(default_factory=BackpropConfig)
    nonlinear: EmpiricalModelParams | None = None
    fiber_strain: float | None = None

    def __post_init__(self):
        self.features = tuple(self.features)
        self.roster = tuple(self.roster)
        if not self.roster:
            raise ValueError("roster must not be empty")
        for name in self.roster:
            if name not in ALL_MODELS:
                raise ValueError(f"unknown roster model {name!r}; choose from {ALL_MODELS}")
        if len(set(self.roster)) != len(self.roster):
            raise ValueError("roster models must be unique")
        unknown = [f for f in self.features if f not in FIELDS]
        if unknown:
            raise ValueError(f"unknown feature(s): {', '.join(unknown)}")
        if TARGET_FIELD in self.features:
            raise ValueError(f"{TARGET_FIELD!r} is the target and cannot be a feature")
        if "nonlinear" in self.roster and self.nonlinear is None:
            raise ValueError("roster includes 'nonlinear' but no k/n parameters were given")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.hidden_neurons < 1:
            raise ValueError("hidden_neurons must be >= 1")

    def topology(self) -> NetworkTopology:
        return NetworkTopology(
            input_size=len(self.features),
            hidden_sizes=(self.hidden_neurons,),
            output_size=1,
            hidden_activation=self.hidden_activation,
            output_activation=self.output_activation,
        )

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        allowed = {
            "dataset", "synth", "features", "roster", "train_fraction", "seed",
            "out_dir", "hidden_neurons", "hidden_activation", "output_activation",
            "models", "fiber_strain",
        }
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
        kwargs: dict = {k: data[k] for k in
                        ("dataset", "train_fraction", "seed", "out_dir", "hidden_neurons",
                         "hidden_activation", "output_activation", "fiber_strain")
                        if k in data}
        if "features" in data:
            kwargs["features"] = tuple(data["features"])
        if "roster" in data:
            kwargs["roster"] = tuple(data["roster"])
        if "synth" in data and data["synth"] is not None:
            s = dict(data["synth"])
            s_unknown = sorted(set(s) - {"n", "noise_fraction", "seed"})
            if s_unknown:
                raise ValueError(f"unknown synth key(s): {', '.join(s_unknown)}")
            kwargs["synth"] = SynthSpec(**s)
        models = dict(data.get("models", {}))
        builders = {"pso": PsoConfig.from_dict, "gwo": GwoConfig.from_dict,
                    "ba": BaConfig.from_dict, "ann": BackpropConfig.from_dict}
        for name, build in builders.items():
            if name in models:
                kwargs[name] = build(models.pop(name))
        if "nonlinear" in models:
            nl = models.pop("nonlinear")
            kwargs["nonlinear"] = EmpiricalModelParams(k=float(nl["k"]), n=float(nl["n"]))
        if models:
            raise ValueError(f"unknown model config key(s): {', '.join(sorted(models))}")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class ComparisonRow:
    model: str
    n: int
    accuracy_percent: float | None
    r_squared: float | None
    mse_pct: float | None
    mae_pct: float | None
    mse_mpa: float
    mae_mpa: float


@dataclass
class ComparisonTable:
    """One row per successfully evaluated roster model, plus failures."""

    rows: list[ComparisonRow]
    errors: dict[str, str]

    def row(self, model: str) -> ComparisonRow:
        for r in self.rows:
            if r.model == model:
                return r
        raise KeyError(model)

    def to_dict(self) -> dict:
        return {
            "rows": [dataclasses.asdict(r) for r in self.rows],
            "errors": dict(self.errors),
        }

    def to_csv(self) -> str:
        lines = ["model,n,accuracy_percent,r_squared,mse_pct,mae_pct,mse_mpa,mae_mpa"]
        for r in self.rows:
            cells = [r.model, str(r.n)]
            for v in (r.accuracy_percent, r.r_squared, r.mse_pct, r.mae_pct, r.mse_mpa, r.mae_mpa):
                cells.append("" if v is None else repr(float(v)))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


@dataclass
class ExperimentResult:
    comparison: ComparisonTable
    reports: dict[str, EvaluationReport]
    models: dict[str, TrainedModel]
    histories: dict[str, list[float]]
    n_train: int
    n_test: int
    seed: int


def _train_model(name, config, topology, norm, X_train, y_train):
    if name == "ann":
        cfg = replace(config.ann, seed=model_seed(config.seed, name))
        weights, history = train_backprop(topology, X_train, y_train, cfg)
        provenance = {"optimizer": "ann", "seed": cfg.seed, "iterations": cfg.epochs,
                      "learning_rate": cfg.learning_rate}
    else:
        cfg = replace(getattr(config, name), seed=model_seed(config.seed, name))
        weights, trace = train_hybrid(name, topology, X_train, y_train, cfg,
                                      half_width=WEIGHT_BOUND)
        history = [float(v) for v in trace.best_fitness]
        provenance = {"optimizer": name, "seed": cfg.seed, "iterations": cfg.iterations,
                      "population": cfg.population}
    model = TrainedModel(topology=topology, weights=weights, normalization=norm,
                         features=config.features, provenance=provenance)
    return model, history


def _empirical_predictions(name, config, records) -> np.ndarray:
    params = config.nonlinear if name == "nonlinear" else None
    out = np.empty(len(records))
    for i, r in enumerate(records):
        out[i] = mechanics.predict_record(r, model=name, params=params,
                                          eps_f=config.fiber_strain)
    return out


def run_experiment(
    config: ExperimentConfig, records: Sequence[SpecimenRecord] | None = None
) -> ExperimentResult:
    """Train and evaluate the whole roster on one shared seeded split.

    The split seed, and each model's training seed, derive from the master
    seed, so the identical test split scores every model and a repeated
    run reproduces every artifact byte for byte. A single model's failure
    is recorded in the comparison's errors without aborting the rest.
    When ``config.out_dir`` is set all report files are written there.
    """
    if records is None:
        if config.dataset is not None:
            records = parse_dataset(config.dataset)
        elif config.synth is not None:
            s = config.synth
            synth_seed = config.seed if s.seed is None else s.seed
            records = synth_dataset(s.n, synth_seed, s.noise_fraction, s.params)
        else:
            raise ValueError("config needs a dataset path, a synth spec, or explicit records")
    if not records:
        raise ValueError("dataset is empty")

    train, test = split(records, config.train_fraction, seed=model_seed(config.seed, "split"))
    norm = fit_normalizer(train)
    topology = config.topology()
    X_train = feature_matrix(train, config.features, norm)
    y_train = target_vector(train, norm)
    X_test = feature_matrix(test, config.features, norm)
    t_test_mpa = np.array([r.fcc for r in test], dtype=float)

    reports: dict[str, EvaluationReport] = {}
    models: dict[str, TrainedModel] = {}
    histories: dict[str, list[float]] = {}
    errors: dict[str, str] = {}
    rows: list[ComparisonRow] = []
    for name in config.roster:
        try:
            if name in TRAINABLE_MODELS:
                model, history = _train_model(name, config, topology, norm, X_train, y_train)
                models[name] = model
                histories[name] = history
                p_mpa = norm.denormalize(TARGET_FIELD, model.predict_normalized(X_test))
            else:
                p_mpa = _empirical_predictions(name, config, test)
            report = report_from_pairs(t_test_mpa, p_mpa, norm)
            reports[name] = report
            rows.append(ComparisonRow(
                model=name, n=report.n,
                accuracy_percent=report.accuracy_percent, r_squared=report.r_squared,
                mse_pct=report.mse_pct, mae_pct=report.mae_pct,
                mse_mpa=report.mse_mpa, mae_mpa=report.mae_mpa,
            ))
        except Exception as exc:  # isolate per-model failures
            errors[name] = f"{type(exc).__name__}: {exc}"
    result = ExperimentResult(
        comparison=ComparisonTable(rows=rows, errors=errors),
        reports=reports, models=models, histories=histories,
        n_train=len(train), n_test=len(test), seed=config.seed,
    )
    if config.out_dir is not None:
        write_experiment_outputs(result, config)
    return result


def write_experiment_outputs(result: ExperimentResult, config: ExperimentConfig) -> None:
    """Write comparison tables, per-model predictions/traces, and models.

    Output is deterministic for a given result: sorted JSON keys and
    repr-formatted floats, no timestamps.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "seed": result.seed,
        "train_fraction": config.train_fraction,
        "n_train": result.n_train,
        "n_test": result.n_test,
        "roster": list(config.roster),
        "comparison": result.comparison.to_dict(),
    }
    (out / "comparison.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")
    (out / "comparison.csv").write_text(result.comparison.to_csv(), encoding="utf-8")
    for name, report in result.reports.items():
        (out / f"predictions_{name}.csv").write_text(report.pairs_csv(), encoding="utf-8")
    for name, history in result.histories.items():
        (out / f"trace_{name}.csv").write_text(trace_csv(history), encoding="utf-8")
    for name, model in result.models.items():
        save_model(model, out / f"model_{name}.json")


class EmpiricalPredictor:
    """Closed-form strength model behind the predict_values interface.

    The rupture strain comes from the constructor value, the input's own
    ``eps_h_rup`` entry, or the constructor fiber strain, in that order.
    """

    def __init__(self, model: str = "lam_teng", params: EmpiricalModelParams | None = None,
                 eps_h_rup: float | None = None, eps_f: float | None = None):
        if model not in EMPIRICAL_MODELS:
            raise ValueError(f"unknown empirical model {model!r}; choose from {EMPIRICAL_MODELS}")
        if model == "nonlinear" and params is None:
            raise ValueError("nonlinear model requires explicit EmpiricalModelParams")
        self.model = model
        self.params = params
        self.eps_h_rup = eps_h_rup
        self.eps_f = eps_f

    def predict_values(self, values: Mapping[str, float]) -> tuple[float, list[str]]:
        fcc = mechanics.predict_record(values, model=self.model, params=self.params,
                                       eps_h_rup=self.eps_h_rup, eps_f=self.eps_f)
        return fcc, []


@dataclass(frozen=True)
class SweepSpec:
    """One-variable sweep request: grid bounds plus fixed companions."""

    var: str
    start: float
    stop: float
    steps: int
    fixed: Mapping[str, float]

    def __post_init__(self):
        if self.var not in SWEEP_VARIABLES:
            raise ValueError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        if self.steps < 2:
            raise ValueError("steps must be >= 2")
        if not self.stop > self.start:
            raise ValueError(f"sweep needs stop > start, got [{self.start}, {self.stop}]")


@dataclass
class SweepGrid:
    var: str
    values: np.ndarray
    fixed: dict[str, float]
    predictions: np.ndarray
    percent_change: float
    warnings: list[str]

    def to_csv(self) -> str:
        lines = [f"{self.var},prediction_mpa"]
        lines.extend(f"{float(v)!r},{float(p)!r}" for v, p in zip(self.values, self.predictions))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "var": self.var,
            "values": [float(v) for v in self.values],
            "fixed": {k: float(v) for k, v in self.fixed.items()},
            "predictions": [float(p) for p in self.predictions],
            "percent_change": self.percent_change,
            "warnings": list(self.warnings),
        }


def parametric_sweep(predictor, spec: SweepSpec) -> SweepGrid:
    """Evaluate a predictor over a strictly increasing grid in one input.

    ``predictor`` needs a ``predict_values(mapping) -> (fcc, warnings)``
    method (TrainedModel and EmpiricalPredictor both qualify). Grid points
    outside a trained model's normalization range only produce warnings;
    extrapolation is allowed.
    """
    values = np.linspace(spec.start, spec.stop, spec.steps)
    base = {k: float(v) for k, v in spec.fixed.items()}
    predictions = np.empty(spec.steps)
    warnings: list[str] = []
    for i, v in enumerate(values):
        point = dict(base)
        point[spec.var] = float(v)
        fcc, point_warnings = predictor.predict_values(point)
        predictions[i] = fcc
        warnings.extend(f"{spec.var}={v:g}: {w}" for w in point_warnings)
    if predictions[0] == 0.0:
        raise ValueError("cannot report percent change from a zero first prediction")
    percent = 100.0 * (predictions[-1] - predictions[0]) / predictions[0]
    return SweepGrid(var=spec.var, values=values, fixed=base,
                     predictions=predictions, percent_change=float(percent),
                     warnings=warnings)


@dataclass
class RatioDistribution:
    """Distribution of experimental over predicted strength-gain ratios."""

    ratios: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray
    mean: float
    stdev: float
    excluded: int

    def to_csv(self) -> str:
        lines = ["bin_lo,bin_hi,count"]
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            lines.append(f"{float(lo)!r},{float(hi)!r},{int(c)}")
        return "\n".join(lines) + "\n"


def ratio_distribution(
    predict: Callable[[SpecimenRecord], float],
    records: Sequence[SpecimenRecord],
    bins: int = 10,
) -> RatioDistribution:
    """Histogram of (fcc/fco) experimental over (fcc/fco) predicted.

    ``predict`` maps one record to a predicted strength in MPa. Records
    with non-positive predictions are excluded and counted. The bin edges
    span [min ratio, max ratio] exactly.
    """
    if not records:
        raise ValueError("ratio_distribution requires at least one record")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    ratios = []
    excluded = 0
    for r in records:
        predicted = float(predict(r))
        if predicted <= 0.0:
            excluded += 1
            continue
        ratios.append((r.fcc / r.fco) / (predicted / r.fco))
    if not ratios:
        raise ValueError("no usable predictions: every record was excluded")
    arr = np.asarray(ratios, dtype=float)
    lo, hi = float(arr.min()), float(arr.max())
    edges = np.linspace(lo, hi, bins + 1)
    if np.all(np.diff(edges) > 0.0):
        counts, edges = np.histogram(arr, bins=bins, range=(lo, hi))
    else:
        # a (near-)degenerate spread cannot carry `bins` distinct edges
        pad = max(0.5, abs(lo) * 1e-9)
        counts, edges = np.histogram(arr, bins=bins, range=(lo - pad, hi + pad))
    stdev = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return RatioDistribution(ratios=arr, bin_edges=edges, counts=counts,
                             mean=float(arr.mean()), stdev=stdev, excluded=excluded)


def export_model(model: TrainedModel, path) -> None:
    """Write a trained model to a self-contained JSON document."""
    save_model(model, path)


def import_model(path) -> TrainedModel:
    """Load a model exported by export_model; round-trips are exact."""
    return load_model(path)
