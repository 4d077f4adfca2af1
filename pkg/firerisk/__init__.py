from . import ensemble, models
from .config import PipelineConfig, load_config
from .runner import Runner
