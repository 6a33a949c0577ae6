"""
Core module
Volume types, data models and error hierarchy
"""

from .errors import DropoutQCError
from .models import (
    Measure, EntropyVariant, CVVariant, Datatype, VolumeHeader, CaseManifest,
    CaseReport, CorrelationResult, WindowSpec, NormalizationStats,
    PhantomSpec, NoiseSpec, ShapeKind, FlagRule, FlagPolicy, FlaggedCase,
)
from .volume import VoxelGrid, BinaryMask, binarize, dice, bounding_box, crop

__all__ = [
    # Errors
    'DropoutQCError',
    # Models
    'Measure', 'EntropyVariant', 'CVVariant', 'Datatype', 'VolumeHeader', 'CaseManifest',
    'CaseReport', 'CorrelationResult', 'WindowSpec', 'NormalizationStats',
    'PhantomSpec', 'NoiseSpec', 'ShapeKind', 'FlagRule', 'FlagPolicy', 'FlaggedCase',
    # Volumes
    'VoxelGrid', 'BinaryMask', 'binarize', 'dice', 'bounding_box', 'crop',
]
