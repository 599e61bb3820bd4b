"""Pipeline configuration: dataclasses, JSON round trip, presets.

A PipelineConfig carries every parameter of both stages plus the
framing setup, serializes losslessly to a JSON document, and ships in
three bundled presets (communication, voice-trigger, multimedia).
Unknown or missing keys are rejected with the offending dotted key
named. Command-line overrides address any leaf by its dotted key.
"""

import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .framing import FrameConfig
from .gain import GainParams
from .noise_tracking import TrackerParams

PRESET_DIR_ENV = "DUALSTAGE_PRESET_DIR"


@dataclass(frozen=True)
class StageConfig:
    """Tracker and gain settings for one suppression stage."""

    tracker: TrackerParams
    gains: GainParams
    uses_snr_feed: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    """Full parameter set for one stream; immutable once built."""

    frame: FrameConfig
    stage1: StageConfig
    stage2: StageConfig
    num_bands: int = 33
    preset_name: str = ""

    def __post_init__(self):
        if self.stage1.uses_snr_feed:
            raise ConfigError("stage1.uses_snr_feed must be false; only stage2 takes the feed")
        if self.num_bands < 1:
            raise ConfigError(f"num_bands must be at least 1, got {self.num_bands}")
        if self.num_bands > self.frame.num_bins:
            raise ConfigError(
                f"num_bands must not exceed the {self.frame.num_bins} bins, "
                f"got {self.num_bands}"
            )
        for sname, stage in (("stage1", self.stage1), ("stage2", self.stage2)):
            for fname, value in (
                ("tracker.alpha", stage.tracker.alpha),
                ("gains.mu", stage.gains.mu),
                ("gains.gain_floor", stage.gains.gain_floor),
            ):
                if isinstance(value, tuple) and len(value) != self.num_bands:
                    raise ConfigError(
                        f"{sname}.{fname} has {len(value)} entries, expected "
                        f"num_bands = {self.num_bands}"
                    )


def _require(d: dict, path: str, allowed: tuple[str, ...]) -> None:
    prefix = path + "." if path else ""
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown config key {prefix + str(key)!r}")
    for key in allowed:
        if key not in d:
            raise ConfigError(f"missing config key {prefix + key!r}")


def _as_int(v, key):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"config key {key!r} must be an integer, got {v!r}")
    return v


def _as_float(v, key):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"config key {key!r} must be a number, got {v!r}")
    return float(v)


def _as_bool(v, key):
    if not isinstance(v, bool):
        raise ConfigError(f"config key {key!r} must be true or false, got {v!r}")
    return v


def _as_str(v, key):
    if not isinstance(v, str):
        raise ConfigError(f"config key {key!r} must be a string, got {v!r}")
    return v


def _as_scalar_or_tuple(v, key):
    if isinstance(v, (list, tuple)):
        return tuple(_as_float(x, key) for x in v)
    return _as_float(v, key)


def _frame_from_dict(d: dict, path: str) -> FrameConfig:
    _require(
        d,
        path,
        ("sample_rate_hz", "frame_len", "hop_len", "fft_len", "window_kind", "hpf_cutoff_hz"),
    )
    cutoff = d["hpf_cutoff_hz"]
    return FrameConfig(
        sample_rate_hz=_as_int(d["sample_rate_hz"], f"{path}.sample_rate_hz"),
        frame_len=_as_int(d["frame_len"], f"{path}.frame_len"),
        hop_len=_as_int(d["hop_len"], f"{path}.hop_len"),
        fft_len=_as_int(d["fft_len"], f"{path}.fft_len"),
        window_kind=_as_str(d["window_kind"], f"{path}.window_kind"),
        hpf_cutoff_hz=None if cutoff is None else _as_float(cutoff, f"{path}.hpf_cutoff_hz"),
    )


def _tracker_from_dict(d: dict, path: str) -> TrackerParams:
    _require(
        d,
        path,
        (
            "subwindow_len",
            "num_subwindows",
            "bias_factor",
            "alpha",
            "alpha_snr_map",
            "mag_smooth_alpha",
            "scale_window_with_snr",
        ),
    )
    snr_map = d["alpha_snr_map"]
    if snr_map is not None:
        if not isinstance(snr_map, (list, tuple)):
            raise ConfigError(f"config key {path + '.alpha_snr_map'!r} must be a list or null")
        pts = []
        for pt in snr_map:
            if not isinstance(pt, (list, tuple)) or len(pt) != 2:
                raise ConfigError(
                    f"config key {path + '.alpha_snr_map'!r} entries must be [snr_db, mult] pairs"
                )
            pts.append(
                (
                    _as_float(pt[0], f"{path}.alpha_snr_map"),
                    _as_float(pt[1], f"{path}.alpha_snr_map"),
                )
            )
        snr_map = tuple(pts)
    return TrackerParams(
        subwindow_len=_as_int(d["subwindow_len"], f"{path}.subwindow_len"),
        num_subwindows=_as_int(d["num_subwindows"], f"{path}.num_subwindows"),
        bias_factor=_as_float(d["bias_factor"], f"{path}.bias_factor"),
        alpha=_as_scalar_or_tuple(d["alpha"], f"{path}.alpha"),
        alpha_snr_map=snr_map,
        mag_smooth_alpha=_as_float(d["mag_smooth_alpha"], f"{path}.mag_smooth_alpha"),
        scale_window_with_snr=_as_bool(
            d["scale_window_with_snr"], f"{path}.scale_window_with_snr"
        ),
    )


def _gains_from_dict(d: dict, path: str) -> GainParams:
    _require(d, path, ("mu", "gain_floor", "gamma_min", "gamma_max", "noise_floor_eps"))
    return GainParams(
        mu=_as_scalar_or_tuple(d["mu"], f"{path}.mu"),
        gain_floor=_as_scalar_or_tuple(d["gain_floor"], f"{path}.gain_floor"),
        gamma_min=_as_float(d["gamma_min"], f"{path}.gamma_min"),
        gamma_max=_as_float(d["gamma_max"], f"{path}.gamma_max"),
        noise_floor_eps=_as_float(d["noise_floor_eps"], f"{path}.noise_floor_eps"),
    )


def _stage_from_dict(d: dict, path: str) -> StageConfig:
    _require(d, path, ("uses_snr_feed", "tracker", "gains"))
    if not isinstance(d["tracker"], dict) or not isinstance(d["gains"], dict):
        raise ConfigError(f"config sections {path}.tracker and {path}.gains must be objects")
    return StageConfig(
        tracker=_tracker_from_dict(d["tracker"], f"{path}.tracker"),
        gains=_gains_from_dict(d["gains"], f"{path}.gains"),
        uses_snr_feed=_as_bool(d["uses_snr_feed"], f"{path}.uses_snr_feed"),
    )


def config_from_dict(d: dict) -> PipelineConfig:
    """Build a validated PipelineConfig from a plain dict."""
    if not isinstance(d, dict):
        raise ConfigError("config document must be a JSON object")
    _require(d, "", ("preset_name", "frame", "num_bands", "stage1", "stage2"))
    for section in ("frame", "stage1", "stage2"):
        if not isinstance(d[section], dict):
            raise ConfigError(f"config section {section!r} must be an object")
    return PipelineConfig(
        frame=_frame_from_dict(d["frame"], "frame"),
        stage1=_stage_from_dict(d["stage1"], "stage1"),
        stage2=_stage_from_dict(d["stage2"], "stage2"),
        num_bands=_as_int(d["num_bands"], "num_bands"),
        preset_name=_as_str(d["preset_name"], "preset_name"),
    )


def _tracker_to_dict(t: TrackerParams) -> dict:
    snr_map = t.alpha_snr_map
    return {
        "subwindow_len": t.subwindow_len,
        "num_subwindows": t.num_subwindows,
        "bias_factor": t.bias_factor,
        "alpha": list(t.alpha) if isinstance(t.alpha, tuple) else t.alpha,
        "alpha_snr_map": None if snr_map is None else [list(p) for p in snr_map],
        "mag_smooth_alpha": t.mag_smooth_alpha,
        "scale_window_with_snr": t.scale_window_with_snr,
    }


def _gains_to_dict(g: GainParams) -> dict:
    return {
        "mu": list(g.mu) if isinstance(g.mu, tuple) else g.mu,
        "gain_floor": list(g.gain_floor) if isinstance(g.gain_floor, tuple) else g.gain_floor,
        "gamma_min": g.gamma_min,
        "gamma_max": g.gamma_max,
        "noise_floor_eps": g.noise_floor_eps,
    }


def config_to_dict(cfg: PipelineConfig) -> dict:
    """Plain-dict form of a config; JSON-serializable, round-trip exact."""
    return {
        "preset_name": cfg.preset_name,
        "frame": {
            "sample_rate_hz": cfg.frame.sample_rate_hz,
            "frame_len": cfg.frame.frame_len,
            "hop_len": cfg.frame.hop_len,
            "fft_len": cfg.frame.fft_len,
            "window_kind": cfg.frame.window_kind,
            "hpf_cutoff_hz": cfg.frame.hpf_cutoff_hz,
        },
        "num_bands": cfg.num_bands,
        "stage1": {
            "uses_snr_feed": cfg.stage1.uses_snr_feed,
            "tracker": _tracker_to_dict(cfg.stage1.tracker),
            "gains": _gains_to_dict(cfg.stage1.gains),
        },
        "stage2": {
            "uses_snr_feed": cfg.stage2.uses_snr_feed,
            "tracker": _tracker_to_dict(cfg.stage2.tracker),
            "gains": _gains_to_dict(cfg.stage2.gains),
        },
    }


def load_config(path) -> PipelineConfig:
    """Read and validate a config JSON file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def save_config(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(config_dumps(cfg))


def config_dumps(cfg: PipelineConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def _preset_search_dirs() -> list[Path]:
    dirs = []
    env = os.environ.get(PRESET_DIR_ENV)
    if env:
        dirs.append(Path(env))
    dirs.append(Path(str(resources.files("dualstage") / "presets")))
    return dirs


def list_presets() -> list[str]:
    """Names of every preset visible in the search path, sorted."""
    names = set()
    for d in _preset_search_dirs():
        if d.is_dir():
            names.update(p.stem for p in d.glob("*.json"))
    return sorted(names)


def load_preset(name: str) -> PipelineConfig:
    """Load a preset by name.

    A directory named by the DUALSTAGE_PRESET_DIR environment variable
    is searched before the bundled presets, so users can shadow them.
    """
    for d in _preset_search_dirs():
        candidate = d / f"{name}.json"
        if candidate.is_file():
            return load_config(candidate)
    raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")


def default_config() -> PipelineConfig:
    return load_preset("communication")


def apply_overrides(cfg: PipelineConfig, assignments) -> PipelineConfig:
    """Apply dotted-key overrides like 'stage2.gains.mu=1.2'.

    Values are parsed as JSON when possible (numbers, true/false, null,
    lists) and fall back to bare strings; the rebuilt config is fully
    revalidated.
    """
    doc = config_to_dict(cfg)
    for raw in assignments:
        key, sep, value = raw.partition("=")
        if not sep:
            raise ConfigError(f"override {raw!r} must look like key.path=value")
        key = key.strip()
        parts = key.split(".")
        node = doc
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown config key {key!r}")
            node = node[part]
        if not isinstance(node, dict) or parts[-1] not in node:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value.strip()
        node[parts[-1]] = parsed
    return config_from_dict(doc)
