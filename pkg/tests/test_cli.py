import csv
import json

import pytest

from t2t.cli import main
from t2t.data.rdf import parse_dataset

TINY = [
    "--set", "model.embed_dim=4",
    "--set", "model.hidden_dim=6",
    "--set", "model.output_dim=6",
    "--set", "training.batch_size=8",
    "--set", "training.pretrain_epochs=0",
]

WEBNLG = """<?xml version="1.0" encoding="UTF-8"?>
<benchmark>
  <entries>
    <entry category="Astronaut" eid="Id1" size="1">
      <modifiedtripleset>
        <mtriple>Alan_Bean | birthPlace | Wheeler,_Texas</mtriple>
      </modifiedtripleset>
      <lex comment="good" lid="Id1">Alan Bean was born in Wheeler, Texas.</lex>
      <lex comment="good" lid="Id2">Wheeler, Texas is the birthplace of Alan Bean.</lex>
    </entry>
    <entry category="Astronaut" eid="Id2" size="2">
      <modifiedtripleset>
        <mtriple>Alan_Bean | occupation | Test_pilot</mtriple>
        <mtriple>Alan_Bean | nationality | United_States</mtriple>
      </modifiedtripleset>
      <lex comment="good" lid="Id1">Alan Bean is a Test pilot from the United States.</lex>
    </entry>
  </entries>
</benchmark>
"""


def run(argv, code=None):
    if code is None:
        main(argv)
        return
    with pytest.raises(SystemExit) as exit_info:
        main(argv)
    assert exit_info.value.code == code


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    main(["make-corpus", str(out), "--separable", "--train", "100", "--test", "20", "--seed", "1"])
    return out


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory, corpus_dir):
    run_dir = tmp_path_factory.mktemp("run")
    main(["train", "t2t", "--run-dir", str(run_dir), "--max-rounds", "2", "-q",
          "--set", f"paths.train={json.dumps(str(corpus_dir / 'train.jsonl'))}", *TINY])
    return run_dir


def test_version(capsys):
    run(["--version"], 0)
    assert "t2t" in capsys.readouterr().out


def test_no_command_prints_help(capsys):
    run([])
    assert "make-corpus" in capsys.readouterr().out


def test_invalid_override_exits_with_2(capsys):
    run(["train", "mle", "--set", "training.m=0"], 2)
    assert "training.m" in capsys.readouterr().err


def test_missing_training_set_is_a_config_error(tmp_path):
    run(["train", "mle", "--run-dir", str(tmp_path / "run")], 2)


def test_not_a_run_directory_exits_with_1(tmp_path):
    data = tmp_path / "data.jsonl"
    data.write_text("")
    run(["generate", str(tmp_path), str(data)], 1)


def test_make_corpus(corpus_dir):
    train = parse_dataset(corpus_dir / "train.jsonl")
    test = parse_dataset(corpus_dir / "test.jsonl")
    assert len(train) == 100 and len(test) == 20
    assert (corpus_dir / "config.json").exists()


def test_small_default_corpus_is_rejected(tmp_path):
    run(["make-corpus", str(tmp_path / "c"), "--train", "50"], 2)


def test_train_writes_a_run_directory(trained_run):
    for name in ("config.json", "VERSION", "vocab.json", "model.json", "metrics.csv"):
        assert (trained_run / name).exists()
    assert (trained_run / "checkpoints" / "generator.json").exists()
    with open(trained_run / "metrics.csv") as f:
        assert len(list(csv.DictReader(f))) == 2
    config = json.loads((trained_run / "config.json").read_text())
    assert config["model"]["hidden_dim"] == 6
    assert config["training"]["max_rounds"] == 2


def test_identical_runs_write_identical_checkpoints(tmp_path, corpus_dir):
    train = json.dumps(str(corpus_dir / "train.jsonl"))
    runs = [tmp_path / "a", tmp_path / "b"]
    for run_dir in runs:
        run(["train", "t2t", "--run-dir", str(run_dir), "--max-rounds", "2", "-q",
             "--set", f"paths.train={train}", *TINY])
    for name in ("generator.json", "judger.json"):
        first, second = (r / "checkpoints" / name for r in runs)
        assert first.read_bytes() == second.read_bytes()


def test_generate(trained_run, corpus_dir, tmp_path, capsys):
    out = tmp_path / "gen"
    run(["generate", str(trained_run), str(corpus_dir / "test.jsonl"), "--out", str(out)])
    lines = (out / "outputs.txt").read_text().splitlines()
    assert len(lines) == 20
    assert "Wrote 20 sentences" in capsys.readouterr().out


def test_sampled_generation_is_seeded(trained_run, corpus_dir, tmp_path):
    outputs = []
    for name in ("a", "b"):
        run(["generate", str(trained_run), str(corpus_dir / "test.jsonl"), "--decode", "sample",
             "--seed", "3", "--out", str(tmp_path / name)])
        outputs.append((tmp_path / name / "outputs.txt").read_text())
    assert outputs[0] == outputs[1]


def test_evaluate(trained_run, corpus_dir, tmp_path):
    out = tmp_path / "eval"
    run(["evaluate", str(trained_run / "checkpoints" / "generator.json"), str(corpus_dir / "test.jsonl"),
         "--judger", "--predicates", "--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    assert 0.0 <= report["bleu4"] <= 100.0
    assert report["ter"] >= 0.0
    assert report["judger_ppl"] > 0.0
    assert 0.0 <= report["predicate_accuracy"] <= 1.0
    assert (out / "report.csv").exists()


def test_fppl_needs_an_evaluation_model(trained_run, corpus_dir, tmp_path):
    run(["evaluate", str(trained_run), str(corpus_dir / "test.jsonl"), "--fppl", "--out", str(tmp_path / "e")], 2)


def test_resume_continues_the_round_count(tmp_path_factory, corpus_dir):
    run_dir = tmp_path_factory.mktemp("resumed")
    main(["train", "mle", "--run-dir", str(run_dir), "--max-rounds", "1", "-q",
          "--set", f"paths.train={json.dumps(str(corpus_dir / 'train.jsonl'))}", *TINY])
    config = json.loads((run_dir / "config.json").read_text())
    config["training"]["max_rounds"] = 2
    (run_dir / "config.json").write_text(json.dumps(config))
    run(["train", "mle", "--resume", str(run_dir), "-q"])
    state = json.loads((run_dir / "checkpoints" / "state.json").read_text())
    assert state["state"]["round"] == 2


def test_lab(tmp_path, capsys):
    out = tmp_path / "lab"
    run(["lab", "--steps", "10", "--seeds", "0", "--no-plots", "--out", str(out)])
    report = json.loads((out / "lab_report.json").read_text())
    assert {row["objective"] for row in report["rows"]} == {"forward_kl_mle", "inverse_kl_vs_judger", "jsd_mixture"}
    assert (out / "curves.csv").exists()
    assert not list(out.glob("*.svg"))
    assert "inverse vs forward" in capsys.readouterr().out


def test_lab_rejects_bad_steps(tmp_path):
    run(["lab", "--steps", "0", "--out", str(tmp_path / "lab")], 2)


def test_ingest_webnlg(tmp_path):
    xml = tmp_path / "webnlg.xml"
    xml.write_text(WEBNLG)
    out = tmp_path / "ingested"
    run(["ingest-webnlg", str(xml), "--out", str(out)])
    records = parse_dataset(out / "train.jsonl")
    assert len(records) == 3
    assert records[0].text == "Alan Bean was born in Wheeler, Texas."
    triple = records[0].kb.triples[0]
    assert (triple.subject, triple.predicate, triple.object) == ("Alan Bean", "birthPlace", "Wheeler, Texas")
    assert len(records[2].kb) == 2


def test_ingest_broken_xml(tmp_path):
    xml = tmp_path / "broken.xml"
    xml.write_text("<benchmark><entries>")
    run(["ingest-webnlg", str(xml), "--out", str(tmp_path / "o")], 1)
