import json
from pathlib import Path

import pytest

from cop.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


def test_gen_logic_then_oracle_run_and_metrics(tmp_path, capsys):
    dataset = tmp_path / "x.jsonl"
    report = tmp_path / "report.json"
    traces = tmp_path / "traces"
    metrics = tmp_path / "metrics.json"

    assert main(["gen-logic", "--depth", "5", "--n", "10", "--distractors", "10",
                 "--seed", "7", "--out", str(dataset)]) == 0
    assert dataset.exists()
    assert len(dataset.read_text().splitlines()) == 10

    assert main(["run", "--method", "cop", "--backend", "oracle", "--dataset", str(dataset),
                 "--trace-dir", str(traces), "--out", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["accuracy"] == 1.0
    assert data["method"] == "cop"
    assert report.with_name("report.csv").exists()
    assert report.with_name("report_summary.png").exists()

    assert main(["metrics", "--traces", str(traces), "--dataset", str(dataset),
                 "--out", str(metrics)]) == 0
    payload = json.loads(metrics.read_text())
    assert payload["removal_rate"] == 1.0
    assert payload["mean_tau"] == 1.0


def test_run_without_dataset_exits_2(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["run", "--method", "cop", "--backend", "oracle", "--out", "x.json"])
    assert excinfo.value.code == 2
    assert "--dataset" in capsys.readouterr().err


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as excinfo:
        main(["definitely-not-a-command"])
    assert excinfo.value.code == 2


def test_missing_dataset_file_exits_1(tmp_path, capsys):
    code = main(["run", "--method", "cop", "--backend", "oracle",
                 "--dataset", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "r.json")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_prompt_set_directory_override(tmp_path):
    from cop.prompts import PromptSet

    (tmp_path / "digsm").mkdir()
    (tmp_path / "digsm" / "cot.txt").write_text("Custom [[PREMISES]] | [[QUESTION]]")
    prompts = PromptSet.load(tmp_path)
    assert prompts.render("digsm", "cot", premises="A.", question="Q?") == "Custom A. | Q?"
    assert not prompts.has("folio", "cot")


def test_flow_command_matches_frozen_reference(tmp_path):
    reference = json.loads((FIXTURES / "flow_reference.json").read_text())
    for layer_set in ("shallow", "deep"):
        out = tmp_path / f"{layer_set}.json"
        assert main(["flow", "--records", str(FIXTURES / "flow_records.jsonl"),
                     "--layer-set", layer_set, "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        for name, expected in reference[layer_set].items():
            assert payload["metrics"][name] == pytest.approx(expected, abs=1e-9)
        assert "groups" in payload
        assert set(payload["groups"]["A1"]) == {"Base", "Disordered", "Irrelevant"}
        assert payload["groups"]["A1"]["Base"]["p_value"] == 1.0
        assert out.with_name(f"{layer_set}.csv").exists()
        assert out.with_name(f"{layer_set}_groups.png").exists()


def test_gen_logic_seeded_determinism(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["gen-logic", "--depth", "0-5", "--n", "12", "--distractors", "3",
          "--seed", "5", "--out", str(a)])
    main(["gen-logic", "--depth", "0-5", "--n", "12", "--distractors", "3",
          "--seed", "5", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_build_digsm_cli(tmp_path):
    gsm = tmp_path / "gsm.jsonl"
    rows = [
        {"question": "A is one. B is two. C is three. D is four. How many in total?",
         "answer": "#### 10"},
        {"question": "Hans booked a room. That is all. What is 2 + 2?", "answer": "#### 4"},
    ]
    gsm.write_text("\n".join(json.dumps(r) for r in rows))
    pool = tmp_path / "pool.txt"
    pool.write_text("Fern is checking IDs to get into an R-rated movie.\nGrandpa Lou enjoys movies.\n")
    out1, out2 = tmp_path / "d1.jsonl", tmp_path / "d2.jsonl"
    assert main(["build-digsm", "--gsm8k", str(gsm), "--pool", str(pool),
                 "--seed", "3", "--out", str(out1)]) == 0
    assert main(["build-digsm", "--gsm8k", str(gsm), "--pool", str(pool),
                 "--seed", "3", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    records = [json.loads(line) for line in out1.read_text().splitlines()]
    assert len(records) == 1  # the second problem is too short
    assert 2 <= len(records[0]["irrelevant"]) <= 3


def test_gold_run_cli(tmp_path):
    dataset = tmp_path / "x.jsonl"
    report = tmp_path / "gold.json"
    main(["gen-logic", "--depth", "3", "--n", "8", "--distractors", "4",
          "--seed", "21", "--out", str(dataset)])
    # keep only examples that carry a gold proof
    rows = [json.loads(line) for line in dataset.read_text().splitlines()]
    rows = [r for r in rows if r.get("gold_proof")]
    dataset.write_text("\n".join(json.dumps(r) for r in rows))
    assert main(["gold-run", "--backend", "oracle", "--dataset", str(dataset),
                 "--out", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["accuracy"] == 1.0
    assert data["method"] == "gold"
