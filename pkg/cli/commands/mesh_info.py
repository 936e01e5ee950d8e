"""mesh-info: counts, volume, surface and directional areas of the configured mesh"""

from .common import make_pipeline, print_json

HELP = "Report mesh statistics (volume, surface, directional areas)"


def add_arguments(parser):
    pass


def handle(args) -> int:
    pipeline = make_pipeline(args)
    info = pipeline.mesh_info()
    pipeline.manifest.finish()
    print_json(info)
    return 0
