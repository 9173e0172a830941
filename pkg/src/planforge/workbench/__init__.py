from .config import WorkbenchConfig, load_config, preset_path
from .jobs import JobManager, JobRecord
from .service import create_app, serve

__all__ = [
    "JobManager",
    "JobRecord",
    "WorkbenchConfig",
    "create_app",
    "load_config",
    "preset_path",
    "serve",
]
