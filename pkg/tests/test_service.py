import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient

from promptfill.completion import CompletionModel, FusionConfig, model_id_of
from promptfill.data import build_dataset, default_lexicon, make_benchmark
from promptfill.encoders import EncoderConfig, build_vocab
from promptfill.service import MAX_BODY_BYTES, ServiceBundle, create_app

ENC_CFG = EncoderConfig(
    d_point=32, d_text=24, n_centers=16, k_local=8, text_layers=1, text_heads=2, point_heads=2
)
FUS_CFG = FusionConfig(
    d_fuse=32, fusion_blocks=1, decoder_blocks=1, heads=2, n_coarse=8, patch=4, k_query=4,
    use_pretrained=False,
)


@pytest.fixture(scope="module")
def client():
    lex = default_lexicon()
    model = CompletionModel(ENC_CFG, FUS_CFG, build_vocab(lex))
    store = model.build_store(0)
    shapes, _, _ = build_dataset("chair", 10, seed=3)
    demo = {}
    for i, s in enumerate(shapes[:3]):
        inst = make_benchmark(s, seed=i, mode="partnet")
        demo[inst.shape_id] = inst
    bundle = ServiceBundle(
        model=model, store=store, model_id="test-model", category="chair",
        lexicon=lex, demo_instances=demo,
    )
    app = create_app(bundle)
    with TestClient(app, raise_server_exceptions=False) as c:
        c.demo_ids = sorted(demo)
        c.demo = demo
        yield c


def _points(n=64, seed=0):
    rng = np.random.default_rng(seed)
    return (rng.normal(size=(n, 3)) * 0.4).tolist()


class TestHealth:
    def test_ok(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert body["model_id"] == "test-model"


class TestPrompts:
    def test_part_type_filter(self, client):
        r = client.get("/prompts", params={"category": "chair", "part_type": "back"})
        assert r.status_code == 200
        prompts = r.json()["prompts"]
        assert "curved back" in prompts
        assert len(prompts) == 12

    def test_whole_category(self, client):
        r = client.get("/prompts")
        assert r.status_code == 200
        assert len(r.json()["prompts"]) == 12 + 7 + 9 + 22

    def test_unknown_part_type_404(self, client):
        r = client.get("/prompts", params={"category": "chair", "part_type": "wing"})
        assert r.status_code == 404


class TestShapes:
    def test_list(self, client):
        r = client.get("/shapes")
        assert r.status_code == 200
        assert r.json()["shapes"] == client.demo_ids

    def test_detail(self, client):
        sid = client.demo_ids[0]
        r = client.get(f"/shapes/{sid}")
        assert r.status_code == 200
        body = r.json()
        assert body["shape_id"] == sid
        assert body["n_points"] == len(body["points"])
        assert body["removed_part_type"] in ("back", "seat", "armrest", "leg")

    def test_unknown_404(self, client):
        r = client.get("/shapes/nope")
        assert r.status_code == 404


class TestComplete:
    def test_contract(self, client):
        r = client.post("/complete", json={"points": _points(), "prompt": "curved back"})
        assert r.status_code == 200
        body = r.json()
        assert body["model_id"] == "test-model"
        assert len(body["completions"]) == 1
        entry = body["completions"][0]
        assert entry["prompt"] == "curved back"
        assert len(entry["missing"]) == FUS_CFG.missing_size
        assert len(entry["coarse"]) == FUS_CFG.n_coarse
        assert entry["full_size"] == 64 + FUS_CFG.missing_size
        assert entry["oov"] is False
        assert body["timing_ms"] >= 0

    def test_too_few_points_400(self, client):
        r = client.post("/complete", json={"points": _points(10), "prompt": "curved back"})
        assert r.status_code == 400
        assert "too few points" in r.json()["detail"]

    def test_malformed_json_400(self, client):
        r = client.post(
            "/complete", content=b"{not json", headers={"content-type": "application/json"}
        )
        assert r.status_code == 400

    def test_missing_fields_400(self, client):
        r = client.post("/complete", json={"prompt": "curved back"})
        assert r.status_code == 400

    def test_prompt_or_k_required(self, client):
        r = client.post("/complete", json={"points": _points()})
        assert r.status_code == 400
        assert "prompt or k" in r.json()["detail"]

    def test_oov_flagged_but_allowed(self, client):
        r = client.post("/complete", json={"points": _points(), "prompt": "floofy back"})
        assert r.status_code == 200
        assert r.json()["completions"][0]["oov"] is True

    def test_k_variants(self, client):
        r = client.post("/complete", json={"points": _points(), "k": 4, "part_type": "back"})
        assert r.status_code == 200
        body = r.json()
        assert len(body["completions"]) == 4
        prompts = [c["prompt"] for c in body["completions"]]
        assert len(set(prompts)) == 4
        assert prompts == sorted(prompts)

    def test_k_limit_enforced(self, client):
        r = client.post("/complete", json={"points": _points(), "k": 99})
        assert r.status_code == 400

    def test_nonfinite_points_400(self, client):
        pts = _points()
        body = json.dumps({"points": pts, "prompt": "curved back"})
        body = body.replace(str(pts[0][0]), "NaN", 1)
        r = client.post(
            "/complete", content=body.encode(), headers={"content-type": "application/json"}
        )
        assert r.status_code == 400

    def test_oversize_413(self, client):
        r = client.post(
            "/complete",
            content=b"x",
            headers={
                "content-type": "application/json",
                "content-length": str(MAX_BODY_BYTES + 1),
            },
        )
        assert r.status_code == 413

    def test_deterministic_responses(self, client):
        req = {"points": _points(seed=7), "prompt": "flat back"}
        a = client.post("/complete", json=req).json()
        b = client.post("/complete", json=req).json()
        assert a["completions"] == b["completions"]
        assert a["model_id"] == b["model_id"]

    def test_concurrent_identical_requests(self, client):
        req = {"points": _points(seed=9), "prompt": "tall back"}

        def call(_):
            return client.post("/complete", json=req).json()["completions"]

        with ThreadPoolExecutor(max_workers=4) as pool:
            results = list(pool.map(call, range(8)))
        assert all(r == results[0] for r in results)
