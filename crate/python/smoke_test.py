"""Load the compiled extension and exercise the main entry points.

    cargo build -p extruplan-py
    python3 python/smoke_test.py [path/to/libextruplan_py.so]
"""

import importlib.machinery
import importlib.util
import json
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load(path):
    loader = importlib.machinery.ExtensionFileLoader("extruplan", str(path))
    spec = importlib.util.spec_from_file_location("extruplan", path, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    lib_path = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "target/debug/libextruplan_py.so"
    ep = load(lib_path)

    profile = (ROOT / "profiles/hollow_rectangle.json").read_text()
    codec = ep.Codec()
    bits = codec.encode_profile(profile)
    assert len(bits) == 170 and set(bits) <= {0, 1}

    kb = ep.KnowledgeBase()
    assert kb.classify_die_type(profile) == "hollow"
    design = kb.build_design(profile)
    assert len(codec.encode_design(design)) == 93

    doc = json.loads(ep.plan(profile))
    assert doc["source"] == "kb_direct", doc["source"]
    assert doc["plan"]["total_cost"] > 0

    library = ep.Library.generate(30, seed=42)
    assert len(library) == 30
    again = ep.Library.from_json(library.to_json())
    assert again.case_ids() == library.case_ids()

    model = ep.Model.fit(library, hidden=16, epochs=150, seed=7)
    assert model.layer_sizes == (170, 16, 93)
    history = model.mse_history
    assert len(history) == 150 and history[-1] < history[0]
    assert ep.Model.from_json(model.to_json()).to_json() == model.to_json()

    doc = json.loads(ep.plan(profile, model=model, library=library))
    assert doc["source"] in ("nn_prediction", "knn_fallback"), doc["source"]
    report = json.loads(ep.evaluate(model, library))
    assert report["cases"] == 30

    hits = library.nearest(ep.case_study_profile(), k=1)
    assert hits[0][1] == 0, hits

    assert math.isclose(ep.mrr_turning(2.0, 0.1, 0.01, 500.0), math.pi * 2.0 * 0.1 * 0.01 * 500.0)
    assert math.isclose(ep.mrr_milling(10.0, 2.0, 100.0), 2000.0)
    assert math.isclose(ep.wire_edm_linear_speed(18000.0, 50.0), 6.0)
    try:
        ep.mrr_milling(-1.0, 2.0, 100.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative width accepted")

    print("smoke test ok: final mse %.4f, source %s" % (history[-1], doc["source"]))


if __name__ == "__main__":
    main()
