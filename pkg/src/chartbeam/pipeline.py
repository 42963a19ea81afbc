"""End-to-end orchestration of the five experimental variants.

Each variant picks its beamformer input (true locations or chart
coordinates), its charting mode (one-shot over all users, or on-the-fly
over the training set with out-of-sample embedding for the rest) and its
target band. Charts are cached by content hash so variants sharing one
reuse the exact same bytes; every stage is seeded, so reruns reproduce
output files byte for byte.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import beamform, nn, scene as scene_mod
from .chart import Chart, isomap, load_chart, oos_embed_batch, save_chart
from .errors import ConfigError
from .scene import BANDS, DOWNLINK_BS2, UPLINK_BS1, Dataset, SceneConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VariantSpec:
    id: str
    lbb_input: str  # 'true_location' | 'chart'
    chart_mode: str  # 'none' | 'one_shot' | 'on_the_fly'
    chart_dim: int  # None -> RunConfig.dim
    target: str  # band of the target channels
    note: str
    standard_preset: bool = True


VARIANTS = {
    "V1": VariantSpec("V1", "true_location", "none", None, UPLINK_BS1,
                      "baseline: beamform at BS1 from true user locations"),
    "V2": VariantSpec("V2", "chart", "one_shot", None, UPLINK_BS1,
                      "one-shot chart and beamformer both at BS1"),
    "V3": VariantSpec("V3", "chart", "one_shot", None, DOWNLINK_BS2,
                      "one-shot chart at BS1 drives the BS2 downlink beamformer"),
    "V4": VariantSpec("V4", "chart", "one_shot", 3, UPLINK_BS1,
                      "as V2 with a 3-dimensional chart"),
    "V5": VariantSpec("V5", "chart", "on_the_fly", None, DOWNLINK_BS2,
                      "on-the-fly chart at BS1, beamformer at BS2"),
}


@dataclass
class NNConfig:
    features: int = 600
    epochs: int = 30
    batch_size: int = 100
    lr: float = 1e-3
    gamma: float = None  # None -> 0.2 * median pairwise input distance
    hidden: int = 300
    hidden_layers: int = 3


@dataclass
class Seeds:
    split: int = 202
    init: int = 303
    shuffle: int = 404


@dataclass
class RunConfig:
    scene: SceneConfig
    fraction: float = 0.7
    dim: int = 5
    k: int = 5
    nn: NNConfig = field(default_factory=NNConfig)
    seeds: Seeds = field(default_factory=Seeds)
    snr_opt_db: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.fraction < 1.0:
            raise ConfigError(f"fraction {self.fraction} outside (0, 1)")


def default_config(num_users=2000, scene_seed=101):
    return RunConfig(scene=scene_mod.default_scene(num_users, scene_seed))


def load_config(path):
    """Build a RunConfig from a JSON file of nested overrides."""
    with open(path) as f:
        raw = json.load(f)
    known = {"scene", "run", "nn", "seeds"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    scene_dict = scene_mod.default_scene().to_dict()
    for key, value in raw.get("scene", {}).items():
        if key not in scene_dict:
            raise ConfigError(f"unknown scene field: {key}")
        scene_dict[key] = value
    try:
        cfg_scene = SceneConfig.from_dict(scene_dict)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"bad scene config: {exc}") from exc
    config = RunConfig(scene=cfg_scene)
    for key, value in raw.get("run", {}).items():
        if key not in ("fraction", "dim", "k", "snr_opt_db"):
            raise ConfigError(f"unknown run field: {key}")
        config = replace(config, **{key: value})
    nn_cfg = config.nn
    for key, value in raw.get("nn", {}).items():
        if key not in asdict(nn_cfg):
            raise ConfigError(f"unknown nn field: {key}")
        nn_cfg = replace(nn_cfg, **{key: value})
    seeds = config.seeds
    for key, value in raw.get("seeds", {}).items():
        if key not in asdict(seeds):
            raise ConfigError(f"unknown seed field: {key}")
        seeds = replace(seeds, **{key: value})
    return replace(config, nn=nn_cfg, seeds=seeds)


def split(num_users, fraction, seed):
    """Seeded disjoint exhaustive split; train size is floor(fraction * U)."""
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"fraction {fraction} outside (0, 1)")
    perm = np.random.default_rng(seed).permutation(num_users)
    n_train = int(np.floor(fraction * num_users))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


# ---------------------------------------------------------------------------
# chart stage with content-hash caching
# ---------------------------------------------------------------------------

def chart_cache_key(dataset, mode, dim, k, anchor_indices):
    digest = hashlib.sha256()
    digest.update(dataset.content_hash().encode())
    digest.update(f"|{mode}|{dim}|{k}|".encode())
    digest.update(np.ascontiguousarray(anchor_indices, dtype=np.int64).tobytes())
    return digest.hexdigest()[:16]


def build_chart(dataset, mode, dim, k, train_idx=None, cache_dir=None):
    """Chart the BS1 uplink channels; one_shot uses every user, on_the_fly
    only the training rows. Returns (chart, anchor_indices).

    With a cache_dir, an existing chart with the same content key is
    reloaded instead of recomputed, so variants sharing a chart share its
    bytes.
    """
    if mode == "one_shot":
        anchor_indices = np.arange(dataset.num_users)
    elif mode == "on_the_fly":
        if train_idx is None:
            raise ConfigError("on_the_fly charting needs the training indices")
        anchor_indices = np.asarray(train_idx)
    else:
        raise ConfigError(f"unknown chart mode {mode!r}")
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        key = chart_cache_key(dataset, mode, dim, k, anchor_indices)
        slot = cache_dir / f"chart_{key}"
        if (slot / "manifest.json").exists():
            logger.info("reusing cached chart %s", slot.name)
            chart, idx, _ = load_chart(slot, dataset)
            return chart, idx, slot
    channels = dataset.channels(UPLINK_BS1, anchor_indices)
    chart = isomap(channels, k=k, dim=dim)
    if cache_dir is not None:
        save_chart(chart, slot, dataset.content_hash(), UPLINK_BS1, anchor_indices)
        return chart, anchor_indices, slot
    return chart, anchor_indices, None


# ---------------------------------------------------------------------------
# variant runner
# ---------------------------------------------------------------------------

def _median_pairwise(points, cap=1024):
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] > cap:
        stride = int(np.ceil(points.shape[0] / cap))
        points = points[::stride]
    diff = points[:, None, :] - points[None, :, :]
    d = np.sqrt((diff**2).sum(-1))
    iu = np.triu_indices(points.shape[0], 1)
    return float(np.median(d[iu]))


def default_gamma(train_inputs):
    """Lengthscale tied to the input cloud: 0.2 x median pairwise distance."""
    med = _median_pairwise(train_inputs)
    if med <= 0:
        return 1.0
    return 0.2 * med


def variant_inputs(dataset, spec, config, train_idx, test_idx, cache_dir=None):
    """Beamformer inputs for the variant: (train_inputs, test_inputs, chart_slot)."""
    if spec.lbb_input == "true_location":
        return dataset.locations[train_idx], dataset.locations[test_idx], None
    dim = spec.chart_dim if spec.chart_dim is not None else config.dim
    if spec.chart_mode == "one_shot":
        chart, _, slot = build_chart(dataset, "one_shot", dim, config.k,
                                     cache_dir=cache_dir)
        z = chart.latents
        return z[:, train_idx].T, z[:, test_idx].T, slot
    chart, _, slot = build_chart(dataset, "on_the_fly", dim, config.k,
                                 train_idx=train_idx, cache_dir=cache_dir)
    test_inputs = oos_embed_batch(chart, dataset.channels(UPLINK_BS1, test_idx))
    return chart.latents.T, test_inputs, slot


def run_variant(variant, config, out_dir, dataset=None):
    """Run one variant end to end; returns its EvalReport.

    Artifacts land under out_dir: dataset/ (shared), cache/chart_* (shared)
    and <variant>/{model,report}.
    """
    spec = VARIANTS[variant] if isinstance(variant, str) else variant
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if dataset is None:
        dataset = ensure_dataset(config.scene, out_dir / "dataset")
    train_idx, test_idx = split(dataset.num_users, config.fraction,
                                config.seeds.split)
    train_inputs, test_inputs, chart_slot = variant_inputs(
        dataset, spec, config, train_idx, test_idx, cache_dir=out_dir / "cache")

    train_targets = dataset.central_subcarrier(spec.target, train_idx)
    test_targets = dataset.central_subcarrier(spec.target, test_idx)

    gamma = config.nn.gamma if config.nn.gamma else default_gamma(train_inputs)
    model = nn.build_model(
        dim_in=train_inputs.shape[1],
        num_antennas=dataset.scene.num_antennas,
        features=config.nn.features,
        gamma=gamma,
        hidden=config.nn.hidden,
        hidden_layers=config.nn.hidden_layers,
        seed=config.seeds.init,
    )
    history = nn.train(model, train_inputs, train_targets,
                       epochs=config.nn.epochs, batch_size=config.nn.batch_size,
                       seed=config.seeds.shuffle, lr=config.nn.lr)

    model_dir = out_dir / spec.id / "model"
    nn.save_model(model, model_dir, extra={
        "variant": spec.id,
        "input": spec.lbb_input,
        "target": spec.target,
        "chart": str(chart_slot.resolve()) if chart_slot else None,
        "split": {"fraction": config.fraction, "seed": config.seeds.split},
        "training": {"epochs": config.nn.epochs,
                     "batch_size": config.nn.batch_size, "lr": config.nn.lr,
                     "init_seed": config.seeds.init,
                     "shuffle_seed": config.seeds.shuffle},
        "loss_history": history,
    })

    report = beamform.evaluate(
        model, test_inputs, test_targets,
        locations=dataset.locations[test_idx],
        los=dataset.los[test_idx],
        variant=spec.id,
        transfer_dim=train_inputs.shape[1],
        num_subcarriers=dataset.scene.num_subcarriers,
        snr_opt_db=config.snr_opt_db,
        meta={
            "target": spec.target,
            "note": spec.note,
            "dataset_hash": dataset.content_hash(),
            "bs_positions": [list(p) for p in dataset.scene.bs_positions],
            "seeds": asdict(config.seeds),
            "final_train_loss": history[-1] if history else None,
        },
    )
    report_dir = out_dir / spec.id / "report"
    report.save(report_dir)
    if spec.lbb_input == "chart":
        keep = np.linalg.norm(test_targets, axis=1) >= beamform.ZERO_NORM_FLOOR
        locs = dataset.locations[test_idx][keep]
        zs = np.asarray(test_inputs)[keep]
        beamform.write_csv(
            report_dir / f"chart_{spec.id}.csv", ["x", "y", "z1", "z2"],
            np.column_stack([locs[:, 0], locs[:, 1], zs[:, 0], zs[:, 1]]))
    return report


def ensure_dataset(scene_config, dataset_dir):
    """Load the dataset at dataset_dir if it matches the scene, else generate it."""
    dataset_dir = Path(dataset_dir)
    if (dataset_dir / "manifest.json").exists():
        ds = Dataset.load(dataset_dir)
        if ds.scene == scene_config:
            return ds
        logger.info("dataset at %s has a different scene; regenerating", dataset_dir)
    ds = scene_mod.generate_dataset(scene_config)
    ds.save(dataset_dir)
    return ds


# ---------------------------------------------------------------------------
# cross-variant comparison
# ---------------------------------------------------------------------------

def compare(summaries):
    """Merge per-variant summaries into one table plus pairwise median gaps."""
    rows = []
    for summary in summaries:
        rows.append({
            "variant": summary["variant"],
            "eta_mean": summary["eta_mean"],
            "eta_median": summary["eta_median"],
            "eta_p10": summary["eta_p10"],
            "num_evaluated": summary["num_evaluated"],
        })
    rows.sort(key=lambda r: r["variant"])
    gaps = {}
    for a in rows:
        for b in rows:
            if a["variant"] < b["variant"]:
                gaps[f"{a['variant']}-{b['variant']}"] = (
                    a["eta_median"] - b["eta_median"])
    return {"variants": rows, "median_gaps": gaps}


def format_comparison(result):
    lines = [f"{'variant':<8}{'mean':>10}{'median':>10}{'p10':>10}{'count':>8}"]
    for row in result["variants"]:
        lines.append(
            f"{row['variant']:<8}{row['eta_mean']:>10.4f}"
            f"{row['eta_median']:>10.4f}{row['eta_p10']:>10.4f}"
            f"{row['num_evaluated']:>8d}")
    return "\n".join(lines)


def compare_report_dirs(report_dirs, out_dir=None):
    summaries = []
    for d in report_dirs:
        with open(Path(d) / "summary.json") as f:
            summaries.append(json.load(f))
    result = compare(summaries)
    text = format_comparison(result)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "comparison.json", "w") as f:
            json.dump(result, f, indent=2, sort_keys=True)
        (out_dir / "comparison.txt").write_text(text + "\n")
    return result, text
