"""{0,1}-digit expansions in real, negative, imaginary and complex bases."""

from .bases import Base, evaluate, jq_bounds, parse_base
from .digits import Block, DigitSequence, enumerate_blocks, padded_block, transform_T
from .expansions import branching_witness, count_prefixes, expand
from .spectrum import SpectrumQueryConfig, bracket, enumerate_spectrum, lower_point
from .universal import (AlphaVector, decompose_alpha, extend_with_suffix, universal_even,
                        universal_expansion, verify_certificate)

__version__ = "0.1.0"
