from .app import create_app
from .pipeline import Providers, consensus, run_pipeline
from .store import JobState, JobStore

__all__ = ["create_app", "Providers", "consensus", "run_pipeline", "JobState", "JobStore"]
