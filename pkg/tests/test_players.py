from __future__ import annotations

import io
import json
import threading

import httpx
import pytest

from dialoguebench.core import (
    GM,
    PLAYER_A,
    PLAYER_B,
    ConfigurationError,
    GameInstance,
    InfrastructureError,
    Message,
    PlayerTranscriptView,
    run_episode,
)
from dialoguebench.games import MapWorldGame, ReferenceGame
from dialoguebench.instancegen import experiments_for, generate_experiment
from dialoguebench.players import (
    EndpointConfig,
    HumanPlayer,
    RemotePlayer,
    ScriptedPlayer,
    chat_messages,
    resolve_player,
)

CONFIG = EndpointConfig("https://api.example.test/v1", "test-model", retries=3)
ENV = {"DIALOGUEBENCH_API_KEY": "sk-test"}


def view(k: int, attachments=()) -> PlayerTranscriptView:
    history = tuple(
        Message(GM if i % 2 == 0 else PLAYER_A, PLAYER_A if i % 2 == 0 else GM, f"m{i}", (), i) for i in range(k)
    )
    return PlayerTranscriptView(history, Message(GM, PLAYER_A, "now?", tuple(attachments), k))


def ok(text="GO: north"):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


def remote(handler, **kw):
    client = httpx.Client(transport=httpx.MockTransport(handler))
    sleeps = []
    return RemotePlayer(kw.pop("config", CONFIG), client=client, sleep=sleeps.append, environ=ENV), sleeps


def test_chat_messages_k_plus_one():
    for k in (0, 1, 4):
        msgs = chat_messages(view(k))
        assert len(msgs) == k + 1
        assert msgs[-1] == {"role": "user", "content": "now?"}
    assert [m["role"] for m in chat_messages(view(2))] == ["user", "assistant", "user"]


def test_image_parts_base64(tmp_path):
    img = tmp_path / "room.png"
    img.write_bytes(b"\x89PNG fake")
    msg = chat_messages(view(0, [str(img)]))[0]
    assert msg["content"][0] == {"type": "text", "text": "now?"}
    assert msg["content"][1]["image_url"]["url"].startswith("data:image/png;base64,")
    with pytest.raises(ConfigurationError):
        chat_messages(view(0, [str(tmp_path / "missing.png")]))


def test_request_shape():
    seen = {}

    def handler(request: httpx.Request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return ok()

    player, _ = remote(handler)
    assert player.respond(view(2)) == "GO: north"
    assert seen["url"] == "https://api.example.test/v1/chat/completions"
    assert seen["auth"] == "Bearer sk-test"
    body = seen["body"]
    assert body["model"] == "test-model" and body["temperature"] == 0 and body["max_tokens"] == 512
    assert len(body["messages"]) == 3


def test_retries_then_success():
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) == 1:
            raise httpx.ConnectError("down")
        if len(calls) == 2:
            return httpx.Response(503)
        return ok("DONE")

    player, sleeps = remote(handler)
    assert player.respond(view(0)) == "DONE"
    assert player.retries_used == 2 and sleeps == [0.5, 1.0]


def test_retries_exhausted():
    player, sleeps = remote(lambda r: httpx.Response(429))
    with pytest.raises(InfrastructureError):
        player.respond(view(0))
    assert len(sleeps) == 3


@pytest.mark.parametrize("response", [
    httpx.Response(401, text="no"),
    httpx.Response(200, text="not json"),
    httpx.Response(200, json={"choices": []}),
    httpx.Response(200, json={"choices": [{"message": {"content": None}}]}),
])
def test_non_retryable_failures(response):
    player, sleeps = remote(lambda r: response)
    with pytest.raises(InfrastructureError):
        player.respond(view(0))
    assert sleeps == []


def test_unset_token_is_configuration_error():
    with pytest.raises(ConfigurationError):
        RemotePlayer(CONFIG, environ={})


def test_concurrency_cap():
    active, peak, lock = [0], [0], threading.Lock()
    gate = threading.Event()

    def handler(request):
        with lock:
            active[0] += 1
            peak[0] = max(peak[0], active[0])
        gate.wait(0.05)
        with lock:
            active[0] -= 1
        return ok()

    player, _ = remote(handler, config=EndpointConfig("http://x", "m", concurrency=2))
    threads = [threading.Thread(target=player.respond, args=(view(0),)) for _ in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert peak[0] <= 2


def test_endpoint_config_file(tmp_path):
    path = tmp_path / "ep.json"
    path.write_text(json.dumps({"base_url": "http://x", "model": "m", "max_tokens": 64}))
    assert EndpointConfig.from_file(path).max_tokens == 64
    path.write_text(json.dumps({"base_url": "http://x", "model": "m", "api_style": "completion"}))
    with pytest.raises(ConfigurationError):
        EndpointConfig.from_file(path)
    path.write_text(json.dumps({"base_url": "http://x"}))
    with pytest.raises(ConfigurationError):
        EndpointConfig.from_file(path)


def test_remote_player_in_episode():
    inst = generate_experiment(experiments_for("mapworld-ee", "small")[0], 0)[0]
    player, _ = remote(lambda r: ok("DONE"))
    ep = run_episode(MapWorldGame("ee"), inst, {PLAYER_A: player})
    assert ep.outcome.played and ep.metrics["success"] == 0


def test_human_player_single_and_multiline():
    out = io.StringIO()
    human = HumanPlayer(io.StringIO('GO: north\n{"action": "DONE",\n "graph": {}}\n\nrest\n'), out)
    assert human.single_episode_affinity
    assert human.respond(view(0)) == "GO: north"
    assert human.respond(view(0)) == '{"action": "DONE",\n "graph": {}}'
    assert "now?" in out.getvalue()
    assert human.respond(view(0)) == "rest"
    with pytest.raises(InfrastructureError):
        human.respond(view(0))


def test_human_sees_relayed_messages():
    out = io.StringIO()
    history = (Message(GM, PLAYER_A, "describe", (), 0), Message(PLAYER_A, GM, "DESCRIPTION: x", (), 1),
               Message(PLAYER_B, PLAYER_A, "DESCRIPTION: y", (), 2))
    HumanPlayer(io.StringIO("ok\n"), out).respond(PlayerTranscriptView(history, Message(GM, PLAYER_A, "ask", (), 3)))
    assert "[PlayerB] DESCRIPTION: y" in out.getvalue()


def test_scripted_policies():
    inst = generate_experiment(experiments_for("mapworld-ee", "medium")[0], 0)[0]
    game = MapWorldGame("ee")
    assert run_episode(game, inst, {PLAYER_A: ScriptedPlayer("stopper")}).responses(PLAYER_A) == ["DONE"]
    ep = run_episode(game, inst, {PLAYER_A: ScriptedPlayer("random_mover", seed=4)})
    again = run_episode(game, inst, {PLAYER_A: ScriptedPlayer("random_mover", seed=4)})
    assert ep.to_json() == again.to_json()


def test_scripted_errors():
    with pytest.raises(ConfigurationError):
        ScriptedPlayer("genius")
    ref = generate_experiment(experiments_for("reference", "row")[0], 0)[0]
    with pytest.raises(ConfigurationError):
        ScriptedPlayer("looper").bind(ref, PLAYER_A)


def test_random_listener_never_reads_target():
    inst = generate_experiment(experiments_for("reference", "row")[0], 0)[0]
    stripped = GameInstance(inst.game, inst.experiment, inst.instance_id, inst.seed,
                            {k: v for k, v in inst.payload.items() if k not in ("target_index_a",)})
    ScriptedPlayer("random_b").bind(stripped, PLAYER_B)  # needs nothing A-private


def test_reference_oracle_pair():
    for spec in experiments_for("reference"):
        for inst in generate_experiment(spec, 0):
            for game in ([ReferenceGame("text"), ReferenceGame("image")] if "grids" in inst.payload
                         else [ReferenceGame("image")]):
                ep = run_episode(game, inst, {PLAYER_A: ScriptedPlayer("oracle"), PLAYER_B: ScriptedPlayer("oracle")})
                assert ep.outcome.quality == 100.0


@pytest.mark.parametrize("spec", ["scripted", "scripted:", "robot:x", "human:bob", "remote:"])
def test_resolve_player_errors(spec):
    with pytest.raises(ConfigurationError):
        resolve_player(spec)


def test_resolve_player_kinds():
    assert resolve_player("scripted:oracle").name == "scripted-oracle"
    assert isinstance(resolve_player("human"), HumanPlayer)
