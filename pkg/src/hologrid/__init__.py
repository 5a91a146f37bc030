"""hologrid: object-centric grid-puzzle solving with holographic vectors."""

__version__ = "0.1.0"

from .vsa import VsaConfig, Vocabulary  # noqa: F401
from .ssp import SspEncoder  # noqa: F401
from .perception import build_palette, perceive  # noqa: F401
from .abduction import abduce  # noqa: F401
from .induction import induce  # noqa: F401
from .deduction import solve_task  # noqa: F401
from .harness import (  # noqa: F401
    EvalConfig,
    TaskRecord,
    evaluate,
    generate_sort_of_arc,
    load_arc_directory,
    load_arc_json,
    render_markdown,
)
