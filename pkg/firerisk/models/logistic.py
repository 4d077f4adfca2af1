import logging
import warnings

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .core import BaseModel

logger = logging.getLogger(__name__)


def loss_and_gradient(params, X, target, l2):
    """Regularized mean logistic loss and its gradient

    The objective is mean(log(1 + e^z) - t z) + l2 / (2 n) * ||w||^2 with
    z = X w + b; the intercept b (last entry of `params`) is not penalized.
    """
    n = len(X)
    w, b = params[:-1], params[-1]
    z = X @ w + b
    loss = np.logaddexp(0.0, z) - target * z
    value = loss.mean() + 0.5 * l2 * (w @ w) / n
    residual = (expit(z) - target) / n
    grad = np.empty_like(params)
    grad[:-1] = X.T @ residual + l2 * w / n
    grad[-1] = residual.sum()
    return float(value), grad


class LogisticRegression(BaseModel):
    """L2-regularized logistic regression, one-vs-rest for multiclass

    Fit with L-BFGS-B; a fit counts as converged once the gradient max-norm
    drops below `tol`. Running out of iterations sets the 'not_converged'
    flag and warns instead of failing.

    Parameters
    ----------
    l2: float
        Penalty strength on the weights
    max_iter: int
    tol: float
    """
    family = 'logistic'

    def __init__(self, l2=1.0, max_iter=1000, tol=1e-6, seed=0,
                 log_dir=None):
        super(LogisticRegression, self).__init__(seed, log_dir)
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol
        self.coef_ = None
        self.intercept_ = None
        self.converged_ = None

    def fit(self, X, y, **kwargs):
        X, index = self._prepare(X, y)
        n_classes = len(self.classes_)
        targets = [1] if n_classes <= 2 else list(range(n_classes))
        coef, intercept, converged = [], [], True
        for k in targets:
            target = (index == k).astype(float)
            result = minimize(loss_and_gradient,
                              np.zeros(X.shape[1] + 1),
                              args=(X, target, self.l2), jac=True,
                              method='L-BFGS-B',
                              options={'maxiter': self.max_iter,
                                       'gtol': self.tol, 'ftol': 1e-15})
            _, grad = loss_and_gradient(result.x, X, target, self.l2)
            if np.abs(grad).max() >= self.tol and not result.success:
                converged = False
            coef.append(result.x[:-1])
            intercept.append(result.x[-1])
        self.coef_ = np.array(coef)
        self.intercept_ = np.array(intercept)
        self.converged_ = converged
        if not converged:
            self.flags_.append('not_converged')
            warnings.warn(f'logistic regression did not converge within '
                          f'{self.max_iter} iterations')
        return self

    def decision_function(self, X):
        self._check_fitted()
        scores = np.asarray(X, dtype=float) @ self.coef_.T + self.intercept_
        return scores[:, 0] if len(self.classes_) == 2 else scores

    def predict_proba(self, X):
        self._check_fitted()
        n_classes = len(self.classes_)
        if n_classes == 1:
            return np.ones((len(np.asarray(X)), 1))
        p = expit(self.decision_function(X))
        if n_classes == 2:
            return np.column_stack([1.0 - p, p])
        return p / p.sum(axis=1, keepdims=True)

    def get_state(self):
        state = self._base_state()
        state['coef'] = self.coef_.tolist()
        state['intercept'] = [float(v) for v in self.intercept_]
        state['converged'] = bool(self.converged_)
        return state

    def set_state(self, state):
        self._set_base_state(state)
        self.coef_ = np.asarray(state['coef'], dtype=float)
        self.intercept_ = np.asarray(state['intercept'], dtype=float)
        self.converged_ = state.get('converged', True)
        return self
