"""bioseal: protected biometric templates from learned binary codes.

A hashing network maps feature vectors to intermediate binary codes, a
trainable belief-propagation decoder cleans them into stable final codes,
and SHA3-512 seals the final code into the only stored artifact.
"""

__version__ = "0.1.0"

from . import bch, evalharness, gf2m, hashnet, joint, metrics, nnd, protocol, synth
from .joint import JointModel, integrate

__all__ = [
    "__version__",
    "bch",
    "evalharness",
    "gf2m",
    "hashnet",
    "integrate",
    "joint",
    "JointModel",
    "metrics",
    "nnd",
    "protocol",
    "synth",
]
