from .ast_encoder import AstEncoder, ForestLevels, ShapeError, encode_structure, encode_subtree
from .cast import Batch, CastModel, ModelConfig, make_batch
from .copy import copy_distribution, mix_distributions
from .decode import DecodeOutput, beam_search, greedy
from .seq import LengthError

__all__ = [
    "AstEncoder",
    "Batch",
    "CastModel",
    "DecodeOutput",
    "ForestLevels",
    "LengthError",
    "ModelConfig",
    "ShapeError",
    "beam_search",
    "copy_distribution",
    "encode_structure",
    "encode_subtree",
    "greedy",
    "make_batch",
    "mix_distributions",
]
