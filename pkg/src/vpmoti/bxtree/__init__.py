from .bplustree import BPlusTree, NodeCodec, new_pool
from .curve import SpaceFillingCurve, ZCurve
from .index import BxTree, GridConfig, LocatorError, TimeBucket, bucket_for
from .vhist import VelocityHistogram, enlarge_query

__all__ = [
    "BPlusTree",
    "BxTree",
    "GridConfig",
    "LocatorError",
    "NodeCodec",
    "SpaceFillingCurve",
    "TimeBucket",
    "VelocityHistogram",
    "ZCurve",
    "bucket_for",
    "enlarge_query",
    "new_pool",
]
