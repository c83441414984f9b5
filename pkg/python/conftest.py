# python/ 直下のモジュールをテストから素の import で読めるようにする
import json
import os
import sys

import pytest

ROOT = os.path.dirname(__file__)
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)


@pytest.fixture
def single_segment_file(tmp_path):
    """1区間だけの道路グラフ (1000 m, 0.6 台/m) を書き出す"""
    doc = {
        "nodes": [{"id": 0, "x": 0, "y": 0}, {"id": 1, "x": 1000, "y": 0}],
        "edges": [{"u": 0, "v": 1, "length_m": 1000.0, "density_per_m": 0.6, "parking": True}],
    }
    path = tmp_path / "single.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path
