import json
import logging
import os
import shutil
from datetime import datetime

from config import RUNS_DIR

logger = logging.getLogger(__name__)

BASE_DIR = str(RUNS_DIR)


def ensure_base_dir():
    os.makedirs(BASE_DIR, exist_ok=True)


def get_run_dir(run_id):
    return os.path.join(BASE_DIR, f"run_{run_id}")


def save_run(run_id, config_text, result, report=None, report_name=None):
    """Write config.cfg, result.json and optionally the rendered report"""
    ensure_base_dir()
    run_dir = get_run_dir(run_id)
    os.makedirs(run_dir, exist_ok=True)

    with open(os.path.join(run_dir, "config.cfg"), "w", encoding="utf-8") as f:
        f.write(config_text)
    with open(os.path.join(run_dir, "result.json"), "w", encoding="utf-8") as f:
        json.dump(result, f, indent=2, ensure_ascii=False)
    if report is not None and report_name:
        with open(os.path.join(run_dir, report_name), "wb") as f:
            f.write(report)
    logger.info(f"saved run {run_id} to {run_dir}")
    return run_dir


def load_result(run_id):
    json_path = os.path.join(get_run_dir(run_id), "result.json")
    if os.path.exists(json_path):
        with open(json_path, "r", encoding="utf-8") as f:
            return json.load(f)
    return None


def list_all_runs():
    ensure_base_dir()
    run_ids = []
    for name in os.listdir(BASE_DIR):
        if name.startswith("run_"):
            run_ids.append(name.replace("run_", "", 1))
    return sorted(run_ids)


def delete_run(run_id):
    run_dir = get_run_dir(run_id)
    if os.path.exists(run_dir):
        shutil.rmtree(run_dir)


def get_config_path(run_id):
    path = os.path.join(get_run_dir(run_id), "config.cfg")
    return path if os.path.exists(path) else None


def generate_run_id():
    return datetime.now().strftime("%Y%m%d%H%M%S%f")
