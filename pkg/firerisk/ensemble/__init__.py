from ..models import register_family
from .core import StackedModel
from .folds import fold_indices, stratified_kfold
from .search import SearchResult, random_search
from .threshold import ThresholdResult, check_threshold_source, \
    optimize_threshold

register_family('stack', StackedModel)
