"""HTTP tile service behavior via the in-process test client."""

import io
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from splitsr.server import create_app
from splitsr.zoom import ZoomEngine


def fake_model(patch):
    return np.repeat(np.repeat(patch, 4, axis=2), 4, axis=3) * 0.9 + 12.0


@pytest.fixture
def service(tmp_path):
    engine = ZoomEngine(fake_model, tile_size=32)
    rng = np.random.default_rng(0)
    engine.register_image("pier", rng.uniform(0, 255, (3, 64, 64))
                          .astype(np.float32))
    engine.register_image("atoll", rng.uniform(0, 255, (3, 40, 56))
                          .astype(np.float32))
    ratings = tmp_path / "ratings.jsonl"
    app = create_app(engine, str(ratings))
    return TestClient(app), engine, ratings


def decode_png(resp):
    assert resp.headers["content-type"] == "image/png"
    return np.asarray(Image.open(io.BytesIO(resp.content)))


class TestImages:
    def test_listing(self, service):
        client, _, _ = service
        resp = client.get("/images")
        assert resp.status_code == 200
        assert resp.json() == [
            {"id": "atoll", "width": 56, "height": 40},
            {"id": "pier", "width": 64, "height": 64},
        ]


class TestTileEndpoint:
    def test_png_tile_dimensions(self, service):
        client, _, _ = service
        resp = client.get("/images/pier/tile",
                          params={"x": 0, "y": 0, "zoom": 2.0})
        img = decode_png(resp)
        assert img.shape == (64, 64, 3)  # 32px tile at 2x

    def test_method_toggle_changes_pixels(self, service):
        client, _, _ = service
        base = {"x": 1, "y": 1, "zoom": 3.0}
        a = client.get("/images/pier/tile", params={**base, "method": "splitsr"})
        b = client.get("/images/pier/tile", params={**base, "method": "bilinear"})
        assert a.status_code == b.status_code == 200
        assert a.content != b.content
        assert decode_png(a).shape == decode_png(b).shape

    def test_repeat_request_byte_identical(self, service):
        client, _, _ = service
        params = {"x": 0, "y": 1, "zoom": 2.5}
        first = client.get("/images/pier/tile", params=params)
        second = client.get("/images/pier/tile", params=params)
        assert first.content == second.content

    def test_zoom_above_cap_clamped(self, service):
        client, _, _ = service
        resp = client.get("/images/pier/tile",
                          params={"x": 0, "y": 0, "zoom": 11.0})
        assert resp.status_code == 200
        assert resp.headers["X-Zoom"] == "5.0"
        assert decode_png(resp).shape == (160, 160, 3)

    def test_unknown_image_404(self, service):
        client, _, _ = service
        resp = client.get("/images/ghost/tile",
                          params={"x": 0, "y": 0, "zoom": 2.0})
        assert resp.status_code == 404
        body = resp.json()
        assert body["code"] == "unknown_image"
        assert set(body) == {"code", "message", "request_id"}

    def test_bad_method_400(self, service):
        client, _, _ = service
        resp = client.get("/images/pier/tile", params={
            "x": 0, "y": 0, "zoom": 2.0, "method": "lanczos"})
        assert resp.status_code == 400
        assert resp.json()["code"] == "bad_method"

    def test_tile_outside_grid_409(self, service):
        client, _, _ = service
        resp = client.get("/images/pier/tile",
                          params={"x": 5, "y": 0, "zoom": 2.0})
        assert resp.status_code == 409
        assert resp.json()["code"] == "tile_outside_grid"

    def test_partial_edge_tile(self, service):
        client, _, _ = service
        # atoll is 56 wide at tile_size 32: second column is 24px wide
        resp = client.get("/images/atoll/tile",
                          params={"x": 1, "y": 0, "zoom": 2.0})
        assert decode_png(resp).shape == (64, 48, 3)


class TestZoomAndProgress:
    def test_zoom_submission_and_progress(self, service):
        client, engine, _ = service
        resp = client.post("/images/pier/zoom", json={
            "focus_x": 10.0, "focus_y": 10.0, "zoom": 2.5})
        assert resp.status_code == 200
        rid = resp.json()["request_id"]
        assert resp.json()["zoom"] == 2.5
        before = client.get(f"/requests/{rid}/progress").json()
        assert before["total"] == 4 and before["done"] == 0
        engine.run_until_idle()
        after = client.get(f"/requests/{rid}/progress").json()
        assert after["done"] == 4
        states = [t["state"] for t in after["tiles"]]
        assert states == ["done"] * 4

    def test_zoom_clamped_in_echo(self, service):
        client, _, _ = service
        resp = client.post("/images/pier/zoom", json={
            "focus_x": 0.0, "focus_y": 0.0, "zoom": 9.0})
        assert resp.json()["zoom"] == 5.0

    def test_zoom_unknown_image(self, service):
        client, _, _ = service
        resp = client.post("/images/ghost/zoom", json={
            "focus_x": 0.0, "focus_y": 0.0, "zoom": 2.0})
        assert resp.status_code == 404

    def test_unknown_request_progress(self, service):
        client, _, _ = service
        resp = client.get("/requests/999/progress")
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_request"


class TestRatings:
    def test_rating_appends_jsonl(self, service):
        client, _, ratings = service
        for score, method in ((5, "splitsr"), (3, "bilinear")):
            resp = client.post("/ratings", json={
                "image_id": "pier", "method": method, "score": score})
            assert resp.status_code == 200
        lines = [json.loads(line) for line in
                 ratings.read_text().splitlines()]
        assert len(lines) == 2
        assert lines[0]["score"] == 5 and lines[0]["method"] == "splitsr"
        assert lines[1]["image_id"] == "pier"
        assert all("timestamp" in entry for entry in lines)

    @pytest.mark.parametrize("score", [0, 8, -1])
    def test_out_of_range_score_400(self, service, score):
        client, _, ratings = service
        resp = client.post("/ratings", json={
            "image_id": "pier", "method": "splitsr", "score": score})
        assert resp.status_code == 400
        assert not ratings.exists() or ratings.read_text() == ""

    def test_rating_unknown_image_404(self, service):
        client, _, _ = service
        resp = client.post("/ratings", json={
            "image_id": "ghost", "method": "splitsr", "score": 4})
        assert resp.status_code == 404
