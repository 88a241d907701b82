"""Synthetic workload corpora with planted structure and a latency oracle.

Each metric group is driven by one smooth latent response per workload
family (a sum of scaled sigmoids of one knob), so metrics within a group are
correlated and prunable, workloads of the same family look alike to the
mapper, and latency is a family-specific positive function of the knobs and
latents that a nonlinear regressor can learn. noise_sigma is the single
noise dial: it is the latency noise in latency units, and 2% of it perturbs
the unit-scale latents that metrics observe.
"""

import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .ingest import ColumnKind, ColumnSchema, WorkloadTable, WorkloadRepository

LATENCY_FLOOR = 1.0
METRIC_NOISE_RATIO = 0.02
_SIGMOIDS_PER_LATENT = 3
_GROUPS_PER_FAMILY = 3


@dataclass(frozen=True)
class SynthSpec:
    n_workloads: int = 24
    rows_per_workload: int = 8
    n_knobs: int = 8
    n_metric_groups: int = 8
    metrics_per_group: int = 5
    noise_sigma: float = 2.5
    workload_family_count: int = 4
    seed: int = 0

    def __post_init__(self):
        counts = (
            self.n_workloads,
            self.rows_per_workload,
            self.n_knobs,
            self.n_metric_groups,
            self.metrics_per_group,
            self.workload_family_count,
        )
        if any(c < 1 for c in counts):
            raise ValueError("all counts must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def _workload_id(index, total):
    width = max(2, len(str(total - 1)))
    return f"w{index:0{width}d}"


@dataclass(frozen=True)
class GroundTruth:
    """Deterministic generator parameters; everything needed to score predictions."""

    spec: SynthSpec
    knob_of_group: tuple  # group -> knob index
    amp: np.ndarray  # (groups, families, sigmoids)
    steep: np.ndarray
    center: np.ndarray
    metric_group: tuple  # metric index -> group
    metric_alpha: np.ndarray
    metric_beta: np.ndarray
    family_of: dict  # workload id -> family index
    fam_base: np.ndarray
    fam_groups: np.ndarray  # (families, groups-per-family)
    fam_weight: np.ndarray
    fam_gamma: np.ndarray
    fam_knob_a: np.ndarray
    fam_knob_b: np.ndarray

    def latent(self, group, family, knobs):
        """Latent response of one metric group for rows of knob settings."""
        x = np.asarray(knobs, dtype=np.float64)[..., self.knob_of_group[group]]
        value = np.zeros_like(x)
        for j in range(_SIGMOIDS_PER_LATENT):
            z = self.steep[group, family, j] * (x - self.center[group, family, j])
            value = value + self.amp[group, family, j] / (1.0 + np.exp(-z))
        return value

    def latency_base(self, family, knobs):
        """Noise-free latency before the positivity floor."""
        knobs = np.asarray(knobs, dtype=np.float64)
        total = np.full(knobs.shape[:-1], self.fam_base[family])
        for slot in range(self.fam_groups.shape[1]):
            g = int(self.fam_groups[family, slot])
            total = total + self.fam_weight[family, slot] * self.latent(g, family, knobs)
        interaction = (
            knobs[..., int(self.fam_knob_a[family])]
            * knobs[..., int(self.fam_knob_b[family])]
        )
        return total + self.fam_gamma[family] * interaction

    def to_dict(self):
        return {
            "spec": asdict(self.spec),
            "knob_of_group": list(self.knob_of_group),
            "amp": self.amp.tolist(),
            "steep": self.steep.tolist(),
            "center": self.center.tolist(),
            "metric_group": list(self.metric_group),
            "metric_alpha": self.metric_alpha.tolist(),
            "metric_beta": self.metric_beta.tolist(),
            "family_of": dict(self.family_of),
            "fam_base": self.fam_base.tolist(),
            "fam_groups": self.fam_groups.tolist(),
            "fam_weight": self.fam_weight.tolist(),
            "fam_gamma": self.fam_gamma.tolist(),
            "fam_knob_a": self.fam_knob_a.tolist(),
            "fam_knob_b": self.fam_knob_b.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            spec=SynthSpec(**data["spec"]),
            knob_of_group=tuple(data["knob_of_group"]),
            amp=np.asarray(data["amp"]),
            steep=np.asarray(data["steep"]),
            center=np.asarray(data["center"]),
            metric_group=tuple(data["metric_group"]),
            metric_alpha=np.asarray(data["metric_alpha"]),
            metric_beta=np.asarray(data["metric_beta"]),
            family_of=dict(data["family_of"]),
            fam_base=np.asarray(data["fam_base"]),
            fam_groups=np.asarray(data["fam_groups"], dtype=int),
            fam_weight=np.asarray(data["fam_weight"]),
            fam_gamma=np.asarray(data["fam_gamma"]),
            fam_knob_a=np.asarray(data["fam_knob_a"], dtype=int),
            fam_knob_b=np.asarray(data["fam_knob_b"], dtype=int),
        )


def _draw_truth(spec):
    G, F, M = spec.n_metric_groups, spec.workload_family_count, spec.metrics_per_group
    rng_latent = np.random.default_rng([spec.seed, 1])
    amp = rng_latent.uniform(0.5, 1.5, size=(G, F, _SIGMOIDS_PER_LATENT))
    steep = rng_latent.uniform(3.0, 8.0, size=(G, F, _SIGMOIDS_PER_LATENT))
    steep *= rng_latent.choice([-1.0, 1.0], size=steep.shape)
    center = rng_latent.uniform(0.1, 0.9, size=(G, F, _SIGMOIDS_PER_LATENT))

    rng_metric = np.random.default_rng([spec.seed, 2])
    n_metrics = G * M
    metric_group = tuple(g for g in range(G) for _ in range(M))
    metric_alpha = rng_metric.uniform(-1.0, 1.0, size=n_metrics)
    metric_beta = rng_metric.uniform(0.5, 2.0, size=n_metrics)

    rng_family = np.random.default_rng([spec.seed, 3])
    slots = min(_GROUPS_PER_FAMILY, G)
    fam_base = rng_family.uniform(8.0, 14.0, size=F)
    fam_groups = np.vstack(
        [rng_family.choice(G, size=slots, replace=False) for _ in range(F)]
    )
    fam_weight = rng_family.uniform(4.0, 12.0, size=(F, slots))
    fam_gamma = rng_family.uniform(4.0, 12.0, size=F)
    if spec.n_knobs >= 2:
        pairs = np.vstack(
            [rng_family.choice(spec.n_knobs, size=2, replace=False) for _ in range(F)]
        )
    else:
        pairs = np.zeros((F, 2), dtype=int)
    family_of = {
        _workload_id(w, spec.n_workloads): w % F for w in range(spec.n_workloads)
    }
    return GroundTruth(
        spec=spec,
        knob_of_group=tuple(g % spec.n_knobs for g in range(G)),
        amp=amp,
        steep=steep,
        center=center,
        metric_group=metric_group,
        metric_alpha=metric_alpha,
        metric_beta=metric_beta,
        family_of=family_of,
        fam_base=fam_base,
        fam_groups=fam_groups,
        fam_weight=fam_weight,
        fam_gamma=fam_gamma,
        fam_knob_a=pairs[:, 0],
        fam_knob_b=pairs[:, 1],
    )


def _schema(spec):
    columns = [ColumnSchema(f"knob_{i}", ColumnKind.KNOB) for i in range(spec.n_knobs)]
    for g in range(spec.n_metric_groups):
        for j in range(spec.metrics_per_group):
            columns.append(ColumnSchema(f"metric_g{g}_{j}", ColumnKind.METRIC))
    columns.append(ColumnSchema("latency", ColumnKind.LATENCY))
    return tuple(columns)


def generate(spec):
    """Build a (WorkloadRepository, GroundTruth) pair from a SynthSpec."""
    truth = _draw_truth(spec)
    schema = _schema(spec)
    G, M = spec.n_metric_groups, spec.metrics_per_group
    metric_noise = METRIC_NOISE_RATIO * spec.noise_sigma

    tables = {}
    for w in range(spec.n_workloads):
        wid = _workload_id(w, spec.n_workloads)
        fam = truth.family_of[wid]
        rng = np.random.default_rng([spec.seed, 4, w])
        knobs = rng.uniform(0.0, 1.0, size=(spec.rows_per_workload, spec.n_knobs))
        latents = np.column_stack(
            [truth.latent(g, fam, knobs) for g in range(G)]
        )
        eta = rng.normal(0.0, 1.0, size=(spec.rows_per_workload, G * M))
        metrics = np.empty((spec.rows_per_workload, G * M))
        for m in range(G * M):
            noisy = latents[:, truth.metric_group[m]] + metric_noise * eta[:, m]
            metrics[:, m] = truth.metric_alpha[m] + truth.metric_beta[m] * noisy
        latency = truth.latency_base(fam, knobs)
        latency = latency + rng.normal(0.0, 1.0, size=spec.rows_per_workload) * spec.noise_sigma
        latency = np.maximum(latency, LATENCY_FLOOR)
        values = np.column_stack([knobs, metrics, latency])
        tables[wid] = WorkloadTable(wid, schema, values)
    return WorkloadRepository(tables=tables, schema=schema), truth


def oracle_latency(truth, workload_id, knob_row):
    """Noise-free latency for one knob configuration of a known workload."""
    family = truth.family_of[workload_id]
    knob_row = np.asarray(knob_row, dtype=np.float64)
    value = truth.latency_base(family, knob_row)
    return float(np.maximum(value, LATENCY_FLOOR))


def _write_table_csv(path, table):
    lines = ["workload_id," + ",".join(table.column_names)]
    for row in table.values:
        lines.append(table.workload_id + "," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def schema_hint_for(schema):
    hint = {"workload_id": "workload_id"}
    for col in schema:
        hint[col.name] = col.kind.value
    return hint


def write_corpus(repo, truth, out_dir, n_offline, n_online_b, n_online_c, n_test):
    """Partition a generated repository into corpus files under out_dir.

    Layout: offline/<id>.csv, online_b/<id>.csv, online_c/<id>.csv, one
    combined test.csv, schema_hint.json, ground_truth.json, and a ready-made
    pipeline.json pointing at all of them. Returns the config dict.
    """
    ids = list(repo.workload_ids)
    need = n_offline + n_online_b + n_online_c + n_test
    if need > len(ids):
        raise ValueError(
            f"corpus needs {need} workloads but the repository has {len(ids)}"
        )
    if n_test < 1:
        raise ValueError("need at least one test workload")
    out = Path(out_dir)
    groups = {
        "offline": ids[:n_offline],
        "online_b": ids[n_offline : n_offline + n_online_b],
        "online_c": ids[n_offline + n_online_b : n_offline + n_online_b + n_online_c],
    }
    test_ids = ids[n_offline + n_online_b + n_online_c : need]

    paths = {}
    for group, members in groups.items():
        directory = out / group
        directory.mkdir(parents=True, exist_ok=True)
        paths[group] = []
        for wid in members:
            path = directory / f"{wid}.csv"
            _write_table_csv(path, repo[wid])
            paths[group].append(str(path))

    test_path = out / "test.csv"
    lines = ["workload_id," + ",".join(c.name for c in repo.schema)]
    for wid in test_ids:
        table = repo[wid]
        for row in table.values:
            lines.append(wid + "," + ",".join(repr(float(v)) for v in row))
    test_path.write_text("\n".join(lines) + "\n")

    hint_path = out / "schema_hint.json"
    with open(hint_path, "w") as handle:
        json.dump(schema_hint_for(repo.schema), handle, indent=2)
        handle.write("\n")

    truth_path = out / "ground_truth.json"
    with open(truth_path, "w") as handle:
        json.dump(truth.to_dict(), handle)
        handle.write("\n")

    config = {
        "offline": paths["offline"],
        "online_b": paths["online_b"],
        "online_c": paths["online_c"],
        "test": str(test_path),
        "schema_hint": str(hint_path),
        "clusterer": "kmeans",
        "regressor": {"kind": "gpr", "hyperparams": {"alpha": 0.1}, "seed": truth.spec.seed},
        "n_map_rows": 5,
        "k_min": 2,
        "k_max": 15,
        "seed": truth.spec.seed,
        "distance": "euclidean",
    }
    with open(out / "pipeline.json", "w") as handle:
        json.dump(config, handle, indent=2)
        handle.write("\n")
    return config
