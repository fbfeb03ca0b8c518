"""Elementary functions that accept floats, numpy arrays, jets or mpmath numbers."""

from .expr import fn_abs as abs_  # noqa: F401
from .expr import fn_cos as cos  # noqa: F401
from .expr import fn_exp as exp  # noqa: F401
from .expr import fn_log as log  # noqa: F401
from .expr import fn_sin as sin  # noqa: F401
from .expr import fn_sqrt as sqrt  # noqa: F401
from .expr import fn_tan as tan  # noqa: F401
