from .artifact import ModelArtifact, load_artifact
from .baseline import PriorModel
from .core import BaseModel
from .forest import RandomForest
from .gbdt import GradientBoostedTrees
from .logistic import LogisticRegression
from .mlp import MLPClassifier
from .tree import DecisionTree

# family name -> (class, fixed constructor arguments)
FAMILIES = {}


def register_family(name, cls, **fixed):
    FAMILIES[name] = (cls, fixed)


def make_model(family, params=None, seed=None, log_dir=None):
    """Instantiate a registered model family

    Parameters
    ----------
    family: str
    params: dict, optional
        Hyperparameters; unknown keys raise a TypeError from the constructor
    seed: int, optional
        Overrides any seed in `params`
    """
    if family not in FAMILIES:
        raise KeyError(f'unknown model family {family!r}; '
                       f'choose from {sorted(FAMILIES)}')
    cls, fixed = FAMILIES[family]
    kwargs = dict(params or {})
    kwargs.update(fixed)
    if seed is not None:
        kwargs['seed'] = seed
    model = cls(log_dir=log_dir, **kwargs)
    model.family = family
    return model


def predict_proba(model, X, features=None):
    """Class probabilities of a fitted model or a loaded artifact

    An artifact checks `features` against its manifest first.
    """
    if isinstance(model, ModelArtifact):
        return model.predict_proba(X, features)
    return model.predict_proba(X)


register_family('prior', PriorModel)
register_family('tree', DecisionTree)
register_family('forest', RandomForest)
register_family('gbdt_depth_wise', GradientBoostedTrees, growth='depth_wise')
register_family('gbdt_leaf_wise', GradientBoostedTrees, growth='leaf_wise')
register_family('logistic', LogisticRegression)
register_family('mlp', MLPClassifier)
