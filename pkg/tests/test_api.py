import pytest
from httpx import ASGITransport, AsyncClient

from smogcast.core.runstore import RunStore
from smogcast.dependencies import get_run_store
from smogcast.evaluation import write_metrics_csv, write_ssim_csv
from smogcast.main import app
from smogcast.models.config import RunConfig
from smogcast.models.history import EvaluationRow, HistoryRow, SsimRow
from smogcast.nn.network import build_network
from smogcast.training.checkpoint import save_checkpoint
from smogcast.training.history import write_history_csv

PREFIX = "/api/v1"


@pytest.fixture
def runs_dir(tmp_path, tiny_arch):
    """One complete run, one with only a config, one with a broken history and a stray directory"""
    run = RunConfig(architecture=tiny_arch)
    full = tmp_path / "r1"
    save_checkpoint(full / "checkpoint.smgc", build_network(tiny_arch, seed=0), run, epochs_trained=3)
    write_history_csv(
        full / "history.csv",
        [HistoryRow(epoch=e, train_loss=0.7 / e, val_loss=0.8 / e, train_mse=0.1, val_mse=0.2, lr=1e-3) for e in (1, 2, 3)],
    )
    write_metrics_csv(full / "eval" / "metrics.csv", EvaluationRow(epochs=3, loss=0.3, mse=0.02, avg_ssim=0.6))
    write_ssim_csv(full / "eval" / "ssim.csv", [SsimRow(timestep_index=i, date=f"2023-01-0{i + 1}", ssim=0.5) for i in range(3)])

    bare = tmp_path / "r2"
    bare.mkdir()
    (bare / "config.json").write_text(run.model_dump_json())

    broken = tmp_path / "r3"
    broken.mkdir()
    (broken / "history.csv").write_text("epoch,loss\n1,0.5\n")

    (tmp_path / "scratch").mkdir()
    return tmp_path


@pytest.fixture
async def client(runs_dir):
    async def store_override():
        return RunStore(str(runs_dir))

    app.dependency_overrides[get_run_store] = store_override
    async with AsyncClient(transport=ASGITransport(app=app), base_url="http://test") as ac:
        yield ac
    app.dependency_overrides.clear()


async def test_root_and_health(client):
    response = await client.get("/")
    assert response.status_code == 200
    assert response.json()["api"] == {"v1": PREFIX}

    response = await client.get("/health")
    assert response.json()["status"] == "healthy"
    assert "X-Process-Time" in response.headers


async def test_architecture_totals(client):
    response = await client.get(f"{PREFIX}/architecture", params={"height": 291, "width": 512})
    assert response.status_code == 200
    body = response.json()
    assert body["total_params"] == 69241
    assert body["trainable_params"] == 69133
    assert body["non_trainable_params"] == 108
    assert [row["params"] for row in body["layers"]] == [0, 24, 12736, 64, 55424, 128, 865]
    assert body["layers"][-1]["output_shape"] == [None, 1, 291, 512, 1]


async def test_architecture_rejects_an_empty_grid(client):
    response = await client.get(f"{PREFIX}/architecture", params={"height": 0})
    assert response.status_code == 422
    assert response.json()["detail"] == "Validation error"


async def test_list_runs(client):
    response = await client.get(f"{PREFIX}/runs")
    assert response.status_code == 200
    runs = {run["run_id"]: run for run in response.json()}
    assert sorted(runs) == ["r1", "r2", "r3"]
    assert runs["r1"] == {"run_id": "r1", "has_checkpoint": True, "has_history": True, "has_metrics": True}
    assert runs["r2"]["has_checkpoint"] is False


async def test_run_summary(client, tiny_arch):
    response = await client.get(f"{PREFIX}/runs/r1/summary")
    assert response.status_code == 200
    body = response.json()
    assert body["epochs_trained"] == 3
    assert body["config_fingerprint"] == RunConfig(architecture=tiny_arch).fingerprint()
    assert [row["name"] for row in body["architecture"]["layers"]] == ["input", "bn0", "conv_lstm1", "bn1", "conv_lstm2", "bn2", "head"]


async def test_run_tables(client):
    history = (await client.get(f"{PREFIX}/runs/r1/history")).json()
    assert [row["epoch"] for row in history] == [1, 2, 3]
    assert history[0]["plateau"] is False

    metrics = (await client.get(f"{PREFIX}/runs/r1/metrics")).json()
    assert metrics == [{"epochs": 3, "loss": 0.3, "mse": 0.02, "avg_ssim": 0.6}]

    ssim = (await client.get(f"{PREFIX}/runs/r1/ssim")).json()
    assert [row["date"] for row in ssim] == ["2023-01-01", "2023-01-02", "2023-01-03"]


@pytest.mark.parametrize("path", ["/runs/nope", "/runs/scratch", "/runs/r2/summary", "/runs/r2/metrics"])
async def test_missing_runs_and_artifacts(client, path):
    response = await client.get(f"{PREFIX}{path}")
    assert response.status_code == 404
    assert "detail" in response.json()


async def test_unreadable_artifact(client):
    response = await client.get(f"{PREFIX}/runs/r3/history")
    assert response.status_code == 400
    assert "expected columns" in response.json()["detail"]
