import torch.nn as nn

ACTIVATIONS = {'relu': nn.ReLU, 'tanh': nn.Tanh}


class MLPNetwork(nn.Module):
    """Fully connected network returning class logits

    Parameters
    ----------
    n_inputs: int
    hidden_layers: tuple(int)
        Width of each hidden layer
    n_outputs: int
    activation: str
        'relu' or 'tanh'
    """
    def __init__(self, n_inputs, hidden_layers, n_outputs, activation='relu'):
        super(MLPNetwork, self).__init__()
        layers = []
        width = n_inputs
        for size in hidden_layers:
            layers.append(nn.Linear(width, size))
            layers.append(ACTIVATIONS[activation]())
            width = size
        self.hidden = nn.Sequential(*layers)
        self.output = nn.Linear(width, n_outputs)
        for module in self.modules():
            if isinstance(module, nn.Linear):
                nn.init.xavier_uniform_(module.weight)
                nn.init.zeros_(module.bias)

    def forward(self, x):
        return self.output(self.hidden(x))

    def weights(self):
        """Weight matrices, the terms of the L2 penalty"""
        return [m.weight for m in self.modules() if isinstance(m, nn.Linear)]
