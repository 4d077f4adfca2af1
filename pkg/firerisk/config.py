"""Run configuration

A run is described by one TOML file of flat dotted keys::

    seed = 7
    join.radius_km = 5.0
    labels.mode = "two_class"
    models.forest.n_trees = 200

Command line flags (`--seed`, `--threads`, `--out`, `--set key=value`) are
applied on top of the file before validation.
"""
import datetime
import hashlib
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, \
    model_validator


class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid')


class InputConfig(_Section):
    fire: Optional[str] = None
    weather: Optional[str] = None
    ndvi: Optional[str] = None


class WindowConfig(_Section):
    start: datetime.date = datetime.date(2015, 1, 1)
    end: datetime.date = datetime.date(2023, 12, 31)

    @model_validator(mode='after')
    def _ordered(self):
        if self.start > self.end:
            raise ValueError('window.start must not be after window.end')
        return self


class JoinConfig(_Section):
    radius_km: float = Field(5.0, gt=0)
    idw_power: float = Field(2.0, gt=0)
    ndvi_window_days: int = Field(8, ge=0)
    ndvi_max_km: float = Field(2.5, gt=0)
    index: Literal['grid', 'linear'] = 'grid'


class LabelConfig(_Section):
    mode: Literal['two_class', 'three_class'] = 'two_class'
    thresholds: Optional[List[float]] = None
    cap_quantile: float = Field(0.99, gt=0, le=1)
    class_names: Optional[List[str]] = None

    @model_validator(mode='after')
    def _thresholds(self):
        expected = 1 if self.mode == 'two_class' else 2
        if self.mode == 'three_class' and self.thresholds is None:
            raise ValueError('labels.thresholds = [t1, t2] is required for '
                             'three_class runs')
        if self.thresholds is not None:
            if len(self.thresholds) != expected:
                raise ValueError(f'{self.mode} needs {expected} threshold(s)')
            if any(b <= a for a, b in zip(self.thresholds,
                                          self.thresholds[1:])):
                raise ValueError('label thresholds must strictly increase')
        if self.class_names is not None \
                and len(self.class_names) != expected + 1:
            raise ValueError(f'{self.mode} needs {expected + 1} class names')
        return self


class FeatureConfig(_Section):
    raw_weather: bool = False


class SplitConfig(_Section):
    test_fraction: float = Field(0.2, gt=0, lt=1)


class ResampleConfig(_Section):
    enabled: bool = True
    k_neighbors: int = Field(5, ge=1)
    target_ratio: float = Field(1.0, gt=0, le=1)
    tomek_policy: Literal['remove_majority', 'remove_both'] = \
        'remove_majority'
    seed: int = 0


class ForestConfig(_Section):
    n_trees: int = Field(100, ge=1)
    max_depth: Optional[int] = Field(None, ge=1)
    min_samples_leaf: int = Field(1, ge=1)
    max_features: Any = 'sqrt'
    bootstrap: bool = True
    class_weight: Optional[Literal['balanced']] = None


class GbdtConfig(_Section):
    growth: Literal['depth_wise', 'leaf_wise'] = 'depth_wise'
    n_estimators: int = Field(100, ge=1)
    learning_rate: float = Field(0.1, gt=0)
    max_depth: Optional[int] = Field(6, ge=1)
    max_leaves: int = Field(31, ge=2)
    l2_lambda: float = Field(1.0, ge=0)
    n_bins: Optional[int] = Field(255, ge=2)
    early_stopping_rounds: Optional[int] = Field(None, ge=1)
    subsample: float = Field(1.0, gt=0, le=1)
    min_samples_leaf: int = Field(20, ge=1)
    min_child_weight: float = Field(1e-3, ge=0)
    min_split_gain: float = Field(0.0, ge=0)
    scale_pos_weight: float = Field(1.0, gt=0)


class LogisticConfig(_Section):
    l2: float = Field(1.0, ge=0)
    max_iter: int = Field(1000, ge=1)
    tol: float = Field(1e-6, gt=0)


class MlpConfig(_Section):
    hidden_layers: Tuple[int, ...] = (100, 100, 50)
    activation: Literal['relu', 'tanh'] = 'relu'
    l2_alpha: float = Field(1e-4, ge=0)
    batch_size: int = Field(200, ge=1)
    max_epochs: int = Field(50, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    tol: float = Field(1e-4, ge=0)
    n_iter_no_change: int = Field(10, ge=1)
    seed: int = 0

    @field_validator('hidden_layers')
    @classmethod
    def _widths(cls, value):
        if len(value) == 0:
            raise ValueError('an MLP needs at least one hidden layer')
        if any(width < 1 for width in value):
            raise ValueError('hidden layer widths must be >= 1')
        return value


class ModelsConfig(_Section):
    forest: ForestConfig = ForestConfig()
    gbdt_depth_wise: GbdtConfig = GbdtConfig(growth='depth_wise')
    gbdt_leaf_wise: GbdtConfig = GbdtConfig(growth='leaf_wise',
                                            max_depth=None)
    logistic: LogisticConfig = LogisticConfig()
    mlp: MlpConfig = MlpConfig()

    def params(self, family):
        """Constructor keyword arguments of a model family"""
        section = getattr(self, family, None)
        if section is None:
            return {}
        return section.model_dump()


class SearchConfig(_Section):
    enabled: bool = True
    families: List[str] = ['gbdt_depth_wise', 'gbdt_leaf_wise', 'forest',
                           'mlp']
    n_iter: int = Field(20, ge=1)
    n_folds: int = Field(3, ge=2)
    scoring: Literal['macro_f1', 'high_recall', 'accuracy'] = 'macro_f1'
    distributions: Dict[str, Dict[str, Any]] = {}
    seed: int = 0


class StackConfig(_Section):
    base_learners: List[str] = ['forest', 'gbdt_leaf_wise']
    meta_l2: float = Field(1.0, ge=0)
    n_folds: int = Field(5, ge=2)
    seed: int = 0

    @field_validator('base_learners')
    @classmethod
    def _at_least_two(cls, value):
        if len(value) < 2:
            raise ValueError('a stack needs at least two base learners')
        return value


class ThresholdConfig(_Section):
    enabled: bool = True
    step: float = Field(0.01, gt=0, lt=1)
    low: float = Field(0.01, gt=0, lt=1)
    high: float = Field(0.99, gt=0, lt=1)
    source: Literal['oof', 'validation', 'test'] = 'oof'
    validation_fraction: float = Field(0.2, gt=0, lt=1)


class TrainConfig(_Section):
    families: List[str] = ['forest', 'gbdt_depth_wise', 'gbdt_leaf_wise',
                           'mlp', 'stack']
    baseline: bool = True


class SynthConfig(_Section):
    n_rows: int = Field(52116, ge=10)
    ratio: float = Field(0.053, gt=0, lt=1)
    signal: float = Field(3.0, ge=0)
    n_events: int = Field(500, ge=1)


class PipelineConfig(_Section):
    seed: int
    threads: int = Field(1, ge=1)
    out: str = 'runs/latest'
    inputs: InputConfig = InputConfig()
    window: WindowConfig = WindowConfig()
    join: JoinConfig = JoinConfig()
    labels: LabelConfig = LabelConfig()
    features: FeatureConfig = FeatureConfig()
    split: SplitConfig = SplitConfig()
    resample: ResampleConfig = ResampleConfig()
    models: ModelsConfig = ModelsConfig()
    search: SearchConfig = SearchConfig()
    stack: StackConfig = StackConfig()
    threshold: ThresholdConfig = ThresholdConfig()
    train: TrainConfig = TrainConfig()
    synth: SynthConfig = SynthConfig()

    @model_validator(mode='after')
    def _distinct_paths(self):
        paths = [p for p in (self.inputs.fire, self.inputs.weather,
                             self.inputs.ndvi) if p is not None]
        if len(set(paths)) != len(paths):
            raise ValueError('input paths must be distinct')
        return self

    def config_hash(self):
        """SHA-256 of everything that can change a result"""
        payload = self.model_dump(mode='json', exclude={'threads', 'out'})
        text = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(text.encode('utf-8')).hexdigest()


def _parse_value(text):
    try:
        return tomllib.loads(f'value = {text}')['value']
    except tomllib.TOMLDecodeError:
        return text


def _set_dotted(tree, key, value):
    parts = key.split('.')
    node = tree
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ValueError(f'cannot set {key}: {part} is not a section')
    node[parts[-1]] = value


def load_config(path=None, overrides=None, **flags):
    """Build a validated PipelineConfig

    Parameters
    ----------
    path: str, optional
        TOML file of dotted keys
    overrides: list(str), optional
        `key=value` strings; values use TOML syntax, bare words are strings
    flags: dict
        Top-level keys such as seed, threads, out; None values are ignored

    Returns
    -------
    PipelineConfig
    """
    tree = {}
    if path is not None:
        with open(path, 'rb') as f:
            tree = tomllib.load(f)
    for item in overrides or []:
        if '=' not in item:
            raise ValueError(f'override {item!r} is not key=value')
        key, text = item.split('=', 1)
        _set_dotted(tree, key.strip(), _parse_value(text.strip()))
    for key, value in flags.items():
        if value is not None:
            tree[key] = value
    return PipelineConfig.model_validate(tree)
