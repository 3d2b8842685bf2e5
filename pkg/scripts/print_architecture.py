"""Print the layer table of the default network at the full 291x512 grid."""
from smogcast.cli import format_summary
from smogcast.models.config import ArchitectureConfig
from smogcast.nn.network import layer_summary

FULL_GRID = (291, 512)

if __name__ == "__main__":
    print("=== smogcast network ===\n")
    print(format_summary(layer_summary(ArchitectureConfig(), *FULL_GRID)))
