"""Workbench for multi-parameter singular Radon transforms.

Submodules are imported on demand (``from mpradon import surfaces``); the
package itself stays free of heavy imports so that the command line can
set thread limits before numerical libraries load.
"""

__version__ = "0.1.0"

__all__ = ["dilations", "kernels", "expr", "vfields", "surfaces", "ccgeom", "opnorm", "decide",
           "catalog", "config", "experiments", "gallery", "cli"]
