import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from rtcheck.service import create_app

REPO = Path(__file__).resolve().parent.parent
MODELS = REPO / "models"


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok" and "solver" in body


def test_parse_program(client):
    r = client.post("/parse", json={"source": "x : int; x = (0 -> pre(x) + 1);"})
    assert r.status_code == 200
    body = r.json()
    assert body["kind"] == "program"
    assert body["var_count"] == 1 and body["constraint_count"] == 1
    assert "(arrow 0 (+ (pre x) 1))" in body["sexpr"]


def test_parse_system(client):
    r = client.post("/parse", json={"source": (MODELS / "pipeline.rtc").read_text()})
    body = r.json()
    assert body["kind"] == "system" and body["root"] == "pipeline"


def test_parse_error_is_422(client):
    r = client.post("/parse", json={"source": "x : int; x = pre(x);"})
    assert r.status_code == 422
    assert "pre" in r.json()["detail"]


def test_check_counter_report_matches_schema(client):
    import jsonschema

    r = client.post(
        "/check",
        json={
            "source": (MODELS / "counter.rtc").read_text(),
            "engine": "bmc",
            "k": 5,
        },
    )
    assert r.status_code == 200
    body = r.json()
    schema = json.loads((REPO / "schemas" / "report.schema.json").read_text())
    jsonschema.validate(body, schema)
    assert body["verdict"] == "falsified" and body["exit_code"] == 1
    by_name = {ob["name"]: ob for ob in body["obligations"]}
    assert by_name["stays below three"]["verdict"] == "falsified"
    assert by_name["stays below three"]["counterexample"]["failed_step"] == 4


def test_check_system_with_rule_flag(client):
    src = (MODELS / "cyclic.rtc").read_text()
    ordered = client.post("/check", json={"source": src, "engine": "kind", "k": 4}).json()
    assert ordered["verdict"] == "falsified" and ordered["exit_code"] == 1
    weak = client.post(
        "/check",
        json={"source": src, "engine": "kind", "k": 4, "assumption_rule": "unordered"},
    ).json()
    assert weak["verdict"] == "proved" and weak["exit_code"] == 0


def test_check_program_without_properties_is_422(client):
    r = client.post("/check", json={"source": "x : int;"})
    assert r.status_code == 422


def test_simulate_endpoint(client):
    r = client.post(
        "/simulate",
        json={"source": (MODELS / "calendar_demo.rtc").read_text(), "steps": 3},
    )
    body = r.json()
    assert body["ok"]
    assert body["trace"]["steps"][1]["t"] == "50/1"
    assert all(p["holds"] for p in body["properties"])


def test_simulate_rejects_bad_supplied_trace(client):
    r = client.post(
        "/simulate",
        json={
            "source": "x : int; x = (0 -> pre(x) + 1);",
            "trace": {
                "vars": ["x"],
                "steps": [{"t": "0/1", "x": 0}, {"t": "1/1", "x": 9}],
            },
        },
    )
    body = r.json()
    assert not body["ok"] and body["step"] == 2


def test_emit_observer_has_the_four_constraints(client):
    r = client.post(
        "/emit",
        json={
            "pattern": "whenever a occurs b occurs during [10.0,20.0]",
            "mode": "observer",
        },
    )
    text = r.json()["text"]
    assert "observer-run" in text and "pass = (timer <= 20.0)" in text
    # emitted text re-parses through the front end
    from rtcheck.parser import parse_program

    parse_program("var a : bool; var b : bool;\n" + text)


def test_emit_constraint_mode_unsupported_pattern(client):
    r = client.post(
        "/emit",
        json={
            "pattern": "when c holds during [5.0,5.0] e occurs during [0.0,10.0]",
            "mode": "constraint",
        },
    )
    assert r.status_code == 422
    assert "not supported in constraint" in r.json()["detail"]


def test_emit_smt_golden(client):
    r = client.post(
        "/emit",
        json={"source": (MODELS / "counter.rtc").read_text(), "mode": "smt", "k": 3},
    )
    text = r.json()["text"]
    assert text.splitlines()[0].startswith("; bounded reachability")
    # byte-stable
    again = client.post(
        "/emit",
        json={"source": (MODELS / "counter.rtc").read_text(), "mode": "smt", "k": 3},
    ).json()["text"]
    assert text == again


def test_compose_endpoint_output_reparses(client):
    r = client.post("/compose", json={"source": (MODELS / "pipeline.rtc").read_text()})
    body = r.json()
    from rtcheck.parser import parse_program

    prog = parse_program(body["text"])
    assert "first.out" in prog.vars
    assert body["property"] == "hist(feed >= 0) => result >= 3"


def test_oracle_endpoint(client):
    r = client.post("/oracle", json={"suite": "relaxed-inclusion", "seed": 3, "count": 500})
    body = r.json()
    assert body["passed"] and body["checked"] == 500 and body["seed"] == 3


def test_oracle_unknown_suite(client):
    r = client.post("/oracle", json={"suite": "nope"})
    assert r.status_code == 422
