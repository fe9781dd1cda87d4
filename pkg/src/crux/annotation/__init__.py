"""HTTP service backing the human-evaluation tasks."""

from .service import create_app, normalize_spans
from .store import AnnotationStore
from .tasks import T1Task, T2Task, build_tasks, load_results

__all__ = [
    "AnnotationStore",
    "T1Task",
    "T2Task",
    "build_tasks",
    "create_app",
    "load_results",
    "normalize_spans",
]
