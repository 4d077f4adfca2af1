from .binner import QuantileBinner
from .scaler import StandardScaler
