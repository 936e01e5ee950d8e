"""run: every stage named in the configuration's method list"""

from .common import make_pipeline

HELP = "Run the full pipeline from the configuration"


def add_arguments(parser):
    pass


def handle(args) -> int:
    pipeline = make_pipeline(args)
    result = pipeline.run()
    hit = "hit" if result.eig_cache_hit else "miss" if result.eig_cache_hit is False else "n/a"
    print(f"{len(result.files)} files in {result.output_dir} (eig cache {hit})")
    for warning in result.warnings:
        print(f"warning: {warning}")
    return 0
