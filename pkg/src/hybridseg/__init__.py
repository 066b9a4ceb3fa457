"""Semi-automatic 3-D segmentation: clustered seeds refined by a region-driven level set."""
from .distance import rebuild_sdf, reinitialize
from .levelset import EvolutionParams, LevelSetSegmenter, evolve, field_to_mask
from .mesh import TriangleMesh, marching_cubes
from .metrics import AgreementReport, compare
from .phantom import PhantomSpec
from .pipeline import HybridSegmenter, RunReport
from .seeding import KMeansIntensity, SeedGenerator, estimate_k, generate_seed
from .volume import IntensityNormalizer, normalize, percentile

__version__ = "0.1.0"

__all__ = [
    "AgreementReport",
    "EvolutionParams",
    "HybridSegmenter",
    "IntensityNormalizer",
    "KMeansIntensity",
    "LevelSetSegmenter",
    "PhantomSpec",
    "RunReport",
    "SeedGenerator",
    "TriangleMesh",
    "compare",
    "estimate_k",
    "evolve",
    "field_to_mask",
    "generate_seed",
    "marching_cubes",
    "normalize",
    "percentile",
    "rebuild_sdf",
    "reinitialize",
]
