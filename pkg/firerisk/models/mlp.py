import logging
import warnings

import numpy as np
from tensorboardX import SummaryWriter
import torch
import torch.nn.functional as F
import torch.optim as optim

from ..exceptions import PreconditionError
from ..layers import ACTIVATIONS, MLPNetwork
from .core import BaseModel

logger = logging.getLogger(__name__)


class MLPClassifier(BaseModel):
    """Feedforward network with a softmax output

    Trained in float64 with Adam on mini-batches; the loss is the mean
    cross-entropy plus l2_alpha / (2 * batch size) times the squared
    weights. Initialization and shuffling are seeded. Training stops once
    the epoch loss has failed to improve by `tol` for `n_iter_no_change`
    epochs; reaching `max_epochs` first sets the 'not_converged' flag.

    Parameters
    ----------
    hidden_layers: tuple(int)
    activation: str
        'relu' or 'tanh'
    l2_alpha: float
    batch_size: int
    max_epochs: int
    learning_rate: float
    tol: float
    n_iter_no_change: int
    """
    family = 'mlp'

    def __init__(self, hidden_layers=(100, 100, 50), activation='relu',
                 l2_alpha=1e-4, batch_size=200, max_epochs=50,
                 learning_rate=1e-3, tol=1e-4, n_iter_no_change=10, seed=0,
                 log_dir=None):
        super(MLPClassifier, self).__init__(seed, log_dir)
        hidden_layers = tuple(int(w) for w in hidden_layers)
        if len(hidden_layers) == 0:
            raise PreconditionError('an MLP needs at least one hidden layer')
        if any(w < 1 for w in hidden_layers):
            raise PreconditionError('hidden layer widths must be >= 1')
        if activation not in ACTIVATIONS:
            raise PreconditionError(f'unknown activation {activation!r}')
        self.hidden_layers = hidden_layers
        self.activation = activation
        self.l2_alpha = l2_alpha
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.learning_rate = learning_rate
        self.tol = tol
        self.n_iter_no_change = n_iter_no_change
        self.network_ = None
        self.n_features_ = None
        self.loss_history_ = None

    def initialize(self, n_features, n_classes):
        """Build the network with seeded weights"""
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(self.seed)
            network = MLPNetwork(n_features, self.hidden_layers, n_classes,
                                 self.activation)
        self.network_ = network.double()
        self.n_features_ = n_features
        return self.network_

    def objective(self, X, target):
        """Training loss on tensors X (float64) and target (class index)"""
        logits = self.network_(X)
        penalty = sum((w ** 2).sum() for w in self.network_.weights())
        return F.cross_entropy(logits, target) \
            + 0.5 * self.l2_alpha * penalty / len(X)

    def get_flat_params(self):
        return torch.cat([p.detach().reshape(-1)
                          for p in self.network_.parameters()]).numpy()

    def set_flat_params(self, values):
        values = torch.as_tensor(np.asarray(values, dtype=float))
        offset = 0
        with torch.no_grad():
            for p in self.network_.parameters():
                size = p.numel()
                p.copy_(values[offset:offset + size].reshape(p.shape))
                offset += size

    def loss_and_gradient(self, X, index):
        """Full-batch loss and its gradient over the flat parameters"""
        X_t = torch.as_tensor(np.asarray(X, dtype=float))
        y_t = torch.as_tensor(np.asarray(index, dtype=np.int64))
        self.network_.zero_grad()
        loss = self.objective(X_t, y_t)
        loss.backward()
        grad = torch.cat([p.grad.reshape(-1)
                          for p in self.network_.parameters()])
        return float(loss.item()), grad.numpy().copy()

    def fit(self, X, y, **kwargs):
        X, index = self._prepare(X, y)
        n = len(X)
        threads = torch.get_num_threads()
        torch.set_num_threads(1)
        writer = SummaryWriter(self.log_dir) if self.log_dir else None
        try:
            self.initialize(X.shape[1], len(self.classes_))
            optimizer = optim.Adam(self.network_.parameters(),
                                   lr=self.learning_rate)
            X_t = torch.as_tensor(X)
            y_t = torch.as_tensor(index.astype(np.int64))
            rng = np.random.default_rng(self.seed)
            self.loss_history_ = []
            best, stale, converged = np.inf, 0, False
            for epoch in range(self.max_epochs):
                order = torch.as_tensor(rng.permutation(n))
                total = 0.0
                for start in range(0, n, self.batch_size):
                    batch = order[start:start + self.batch_size]
                    optimizer.zero_grad()
                    loss = self.objective(X_t[batch], y_t[batch])
                    loss.backward()
                    optimizer.step()
                    total += loss.item() * len(batch)
                epoch_loss = total / n
                self.loss_history_.append(epoch_loss)
                if writer is not None:
                    writer.add_scalar('mlp/loss', epoch_loss, epoch)
                stale = stale + 1 if epoch_loss > best - self.tol else 0
                best = min(best, epoch_loss)
                if stale >= self.n_iter_no_change:
                    converged = True
                    break
        finally:
            torch.set_num_threads(threads)
            if writer is not None:
                writer.close()
        if not converged:
            self.flags_.append('not_converged')
            warnings.warn(f'MLP stopped at max_epochs={self.max_epochs} '
                          f'before the loss settled')
        logger.debug('mlp trained %d epochs, final loss %.6f',
                     len(self.loss_history_), self.loss_history_[-1])
        return self

    def predict_proba(self, X):
        self._check_fitted()
        with torch.no_grad():
            logits = self.network_(torch.as_tensor(
                np.asarray(X, dtype=float)))
            return torch.softmax(logits, dim=1).numpy()

    def get_state(self):
        state = self._base_state()
        state['n_features'] = int(self.n_features_)
        state['parameters'] = {name: tensor.tolist() for name, tensor
                               in self.network_.state_dict().items()}
        state['loss_history'] = [float(v) for v in self.loss_history_ or []]
        return state

    def set_state(self, state):
        self._set_base_state(state)
        self.initialize(state['n_features'], len(self.classes_))
        self.network_.load_state_dict(
            {name: torch.tensor(value, dtype=torch.float64)
             for name, value in state['parameters'].items()})
        self.loss_history_ = list(state.get('loss_history', []))
        return self
