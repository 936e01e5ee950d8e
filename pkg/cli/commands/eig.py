"""eig: certified eigendecomposition on [0, (π/l_s_min)² D0], loaded from cache when possible"""

import logging

from .common import make_pipeline

logger = logging.getLogger(__name__)

HELP = "Compute (or load from cache) the Laplace eigendecomposition"


def add_arguments(parser):
    pass


def handle(args) -> int:
    pipeline = make_pipeline(args)
    eig = pipeline.eigendecompose()
    pipeline.manifest.finish()
    source = "cache" if pipeline.manifest.cache_hit("eig") else eig.solver
    print(f"{eig.neig} eigenpairs up to {eig.lambda_max:.6g} ms^-1 ({source}), max residual {eig.max_residual:.2e}")
    return 0
