"""Velocity partitioning for moving-object indexes over a B^x-tree."""

from vpmoti.core import Circle, Domain, MovingPoint, RangeQuery, Rect, Rotation, Vec2, contains, position_at

__all__ = [
    "Circle",
    "Domain",
    "MovingPoint",
    "RangeQuery",
    "Rect",
    "Rotation",
    "Vec2",
    "contains",
    "position_at",
]
__version__ = "0.1.0"
