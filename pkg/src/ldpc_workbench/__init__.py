"""Regular LDPC ensembles over binary channels.

Channel models, code sampling, decoders (BP, bit flipping, brute-force MAP),
density evolution, weight enumerators, replica-symmetric entropy estimates,
finite-state Markov channels, k-SAT message passing and a Monte Carlo
experiment harness.
"""

from .channels import AWGN, BEC, BSC, ZC, ChannelModel, parse_channel
from .codes import RegularEnsemble, TannerGraph, sample_regular
from .decoders import bit_flip_decode, bp_decode, map_decode_bruteforce
from .gf2 import ParityCheckMatrix

__version__ = "0.1.0"

__all__ = [
    "AWGN", "BEC", "BSC", "ZC", "ChannelModel", "parse_channel",
    "RegularEnsemble", "TannerGraph", "sample_regular",
    "bit_flip_decode", "bp_decode", "map_decode_bruteforce",
    "ParityCheckMatrix",
    "__version__",
]
