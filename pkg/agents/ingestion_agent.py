import json
import os
from pathlib import Path
from typing import List, Optional

import pandas as pd

from agents.profiling_agent import REPORT_COLUMNS
from checks.cache import load_table
from domains.instance_io import read_instance
from domains.registry import DOMAINS, domain_for_extension
from planning.model import parse_action


class IngestionAgent:
    def __init__(self):
        self.supported_extensions = [d.extension for d in DOMAINS.values()]

    def load_instance(self, path, domain: Optional[str] = None):
        """
        Load a planning instance; the extension names the domain.
        """
        path = Path(path)
        ext = path.suffix.lower()
        if ext not in self.supported_extensions:
            raise ValueError(f"Unsupported instance format: {ext}. Supported: {self.supported_extensions}")
        spec = domain_for_extension(ext)
        if domain is not None and domain != spec.name:
            raise ValueError(f"{path} is a {spec.name} instance, not {domain}")
        return read_instance(path, expected_domain=spec.name)

    def list_suite(self, directory) -> List[Path]:
        directory = Path(directory)
        if not directory.is_dir():
            raise FileNotFoundError(f"Suite directory not found: {directory}")
        return sorted(p for p in directory.iterdir() if p.suffix.lower() in self.supported_extensions)

    def table_path(self, cache, instance_path) -> Optional[Path]:
        """A directory resolves to `<dir>/<instance stem>.checks.csv`."""
        cache = cache or os.environ.get("HYBRIDPLAN_CACHE")
        if not cache:
            return None
        cache = Path(cache)
        if cache.is_dir() or str(cache).endswith(os.sep):
            return cache / f"{Path(instance_path).stem}.checks.csv"
        return cache

    def load_check_table(self, path):
        if path is None or not Path(path).exists():
            return {}
        return load_table(path)

    def load_report(self, path) -> pd.DataFrame:
        path = Path(path)
        if not path.exists() or path.stat().st_size == 0:
            return pd.DataFrame(columns=REPORT_COLUMNS)
        try:
            return pd.read_csv(path, keep_default_na=False)
        except Exception as e:
            raise ValueError(f"Error loading report: {str(e)}")

    def load_plans(self, path) -> List[list]:
        """Action steps of every stored plan, as ActionInstance sets."""
        with open(path) as f:
            data = json.load(f)
        plans = data["plans"] if isinstance(data, dict) else data
        return [[[parse_action(a) for a in step] for step in plan["steps"]] for plan in plans]
