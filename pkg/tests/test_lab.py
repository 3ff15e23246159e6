import csv
import json

import numpy as np
import pytest

from t2t.data.batch import collate
from t2t.exceptions import ConfigError, LabError
from t2t.lab.experiment import LabSpec, compare, run_lab_experiment, run_single
from t2t.lab.fit import Capacity, fit_tabular, judger_from_samples, planted_target
from t2t.lab.tabular import (
    TabularAR,
    all_sequences,
    divergence_from_joints,
    empirical_joint,
    exact_divergence,
    exact_forward_perplexity,
)
from t2t.model.decoding import greedy_decode, sequence_log_prob


def test_two_point_divergences():
    p, g = np.array([0.5, 0.5]), np.array([0.75, 0.25])
    assert divergence_from_joints("forward_kl", p, g) == pytest.approx(0.1438, abs=1e-4)


def test_support_mismatch():
    p, g = np.array([0.5, 0.5]), np.array([1.0, 0.0])
    assert divergence_from_joints("inverse_kl", p, g) == pytest.approx(np.log(2))
    assert divergence_from_joints("forward_kl", p, g) == float("inf")
    assert divergence_from_joints("jsd", p, g) <= np.log(2)


def test_jsd_is_symmetric_and_bounded():
    rng = np.random.default_rng(0)
    p, g = rng.dirichlet(np.ones(8)), rng.dirichlet(np.ones(8))
    assert divergence_from_joints("jsd", p, g) == pytest.approx(divergence_from_joints("jsd", g, p))
    assert divergence_from_joints("jsd", np.eye(2)[0], np.eye(2)[1]) == pytest.approx(np.log(2))


def test_unknown_divergence():
    with pytest.raises(LabError):
        divergence_from_joints("tv", np.ones(2) / 2, np.ones(2) / 2)


def test_from_joint_reproduces_the_joint():
    joint = np.random.default_rng(1).dirichlet(np.ones(27))
    model = TabularAR.from_joint(joint, 3, 3)
    np.testing.assert_allclose(model.joint(), joint, atol=1e-12)
    seq = all_sequences(3, 3)[5]
    assert sequence_log_prob(model, [0], list(seq)) == pytest.approx(np.log(joint[5]))


def test_from_joint_rejects_non_distributions():
    with pytest.raises(LabError):
        TabularAR.from_joint(np.array([0.5, 0.6]), 2, 1)


def test_identical_models_have_zero_divergence():
    model = TabularAR.create(3, 2, np.random.default_rng(0))
    for kind in ("forward_kl", "inverse_kl", "jsd"):
        assert exact_divergence(kind, model, model) == pytest.approx(0.0, abs=1e-12)


def test_exact_divergence_needs_matching_shapes():
    with pytest.raises(LabError):
        exact_divergence("forward_kl", TabularAR.create(3, 2, np.random.default_rng(0)),
                         TabularAR.create(3, 3, np.random.default_rng(0)))


def test_uniform_forward_perplexity_is_vocab_size():
    uniform = TabularAR.from_joint(np.full(4, 0.25), 2, 2)
    assert exact_forward_perplexity(uniform, uniform) == pytest.approx(2.0)


@pytest.mark.parametrize("context", ["full", "markov", "none"])
def test_capacity_variants_are_distributions(context):
    model = TabularAR.create(3, 3, np.random.default_rng(2), context)
    assert model.joint().sum() == pytest.approx(1.0)


def test_low_rank_and_tied_tables():
    low = TabularAR.create(4, 3, np.random.default_rng(0), "markov", rank=1)
    assert low.joint().sum() == pytest.approx(1.0)
    tied = TabularAR.create(4, 3, np.random.default_rng(0), "none", tied=True)
    cond = [tied.conditionals(t)[0] for t in range(3)]
    np.testing.assert_allclose(cond[0], cond[2])


def test_tabular_sampling_matches_the_joint():
    model = TabularAR.create(2, 2, np.random.default_rng(0))
    samples = np.array(model.sample(20000, np.random.default_rng(1)))
    np.testing.assert_allclose(empirical_joint(samples, 2, 2), model.joint(), atol=0.02)


def test_tabular_models_use_the_decoding_interface():
    model = TabularAR.create(3, 2, np.random.default_rng(0))
    batch = collate([[0]] * 4)
    out = greedy_decode(model, batch.src, batch.src_mask, 2)
    assert all(len(seq) == 2 for seq in out)


def test_planted_target():
    target = planted_target()
    assert target.joint.sum() == pytest.approx(1.0)
    assert target.clusters == 2
    assert target.junk.sum() == 64 - 16
    masses = [target.joint[target.cluster_of == c].sum() for c in range(2)]
    np.testing.assert_allclose(masses, [0.5 * 0.999 + 8e-3 / 64] * 2)
    assert target.modes.sum() == 16


def test_overlapping_clusters():
    with pytest.raises(LabError):
        planted_target(clusters=[[0, 1], [1, 2]])


def test_judger_from_concentrated_samples():
    samples = np.zeros((100, 3), dtype=np.int64)
    judger = judger_from_samples(samples, 4, 3, smoothing=1e-3)
    joint = judger.joint()
    assert joint[0] > 0.99
    assert np.all(joint > 0)


def test_forward_fit_matches_marginals():
    target = planted_target()
    result = fit_tabular("forward_kl_mle", target.model, Capacity("none"), steps=300, seed=0)
    assert result.curve[-1].forward_kl < result.curve[0].forward_kl
    np.testing.assert_allclose(result.model.conditionals(0)[0], 0.25, atol=0.02)


def test_inverse_fit_avoids_junk():
    spec = LabSpec(steps=300, seeds=[0], judger_samples=5000)
    forward, _ = run_single(spec, "forward_kl_mle", 0)
    inverse, curve = run_single(spec, "inverse_kl_vs_judger", 0)
    assert inverse["junk_mass"] < forward["junk_mass"]
    assert inverse["max_cluster_mass"] >= 0.5
    assert forward["clusters_covered"] == 2
    assert curve[0]["step"] == 0 and curve[-1]["step"] == 300


def test_fit_accepts_a_sample_set():
    samples = planted_target().model.sample(2000, np.random.default_rng(0))
    result = fit_tabular("jsd_mixture", np.array(samples), Capacity("full"), steps=50, vocab=4, length=3)
    assert result.curve[-1].jsd < result.curve[0].jsd


def test_unknown_objective():
    with pytest.raises(LabError):
        fit_tabular("reverse", planted_target().model, Capacity())


def test_compare_counts_wins():
    rows = [
        {"objective": "forward_kl_mle", "seed": 0, "junk_mass": 0.7, "inverse_kl": 2.0, "forward_kl": 0.3,
         "clusters_covered": 2, "cluster_mass": [0.15, 0.15], "max_cluster_mass": 0.15},
        {"objective": "inverse_kl_vs_judger", "seed": 0, "junk_mass": 0.01, "inverse_kl": 0.7, "forward_kl": 9.0,
         "clusters_covered": 1, "cluster_mass": [0.98, 0.01], "max_cluster_mass": 0.98},
    ]
    assert compare(rows) == {
        "seeds": 1, "inverse_lower_junk": 1, "inverse_lower_inverse_kl": 1,
        "forward_lower_forward_kl": 1, "forward_covers_all": 1, "inverse_concentrated": 1,
    }


def test_lab_spec_validation(tmp_path):
    with pytest.raises(ConfigError) as err:
        LabSpec(steps=0).validate()
    assert err.value.field == "lab.steps"
    path = tmp_path / "lab.json"
    path.write_text(json.dumps({"vocab": 4, "flavour": 1}))
    with pytest.raises(ConfigError):
        LabSpec.load(path)


def test_lab_experiment_writes_outputs(tmp_path):
    spec = LabSpec(steps=20, seeds=[0, 1], judger_samples=500, record_every=5)
    report = run_lab_experiment(spec, tmp_path)
    assert len(report.rows) == 6
    assert report.comparisons["seeds"] == 2
    doc = json.loads((tmp_path / "lab_report.json").read_text())
    assert len(doc["rows"]) == 6
    with open(tmp_path / "curves.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 6 * 5
    for objective in spec.objectives:
        assert (tmp_path / f"curves_{objective}.svg").exists()


@pytest.mark.slow
def test_inverse_kl_is_mode_seeking_across_seeds(tmp_path):
    report = run_lab_experiment(LabSpec(workers=2), tmp_path, plots=False)
    wins = report.comparisons
    assert wins["seeds"] == 5
    assert wins["inverse_lower_junk"] >= 4
    assert wins["inverse_lower_inverse_kl"] >= 4
    assert wins["forward_lower_forward_kl"] >= 4
    assert wins["forward_covers_all"] >= 4
    assert wins["inverse_concentrated"] >= 4


def test_full_capacity_forward_fit_recovers_the_target():
    target = TabularAR.from_joint(np.random.default_rng(3).dirichlet(np.full(9, 5.0)), 3, 2)
    result = fit_tabular("forward_kl_mle", target, Capacity("full"), steps=4000, seed=0, record_every=500)
    assert 0.5 * np.abs(result.model.joint() - target.joint()).sum() < 1e-3


def test_training_curves_end_below_where_they_start(tmp_path):
    spec = LabSpec(steps=60, seeds=[0, 1], judger_samples=2000, record_every=20)
    run_lab_experiment(spec, tmp_path, plots=False)
    with open(tmp_path / "curves.csv") as f:
        rows = list(csv.DictReader(f))
    runs = {}
    for row in rows:
        runs.setdefault((row["objective"], row["seed"]), []).append(row)
    assert len(runs) == 6
    for curve in runs.values():
        curve.sort(key=lambda r: int(r["step"]))
        assert float(curve[-1]["objective_value"]) <= float(curve[0]["objective_value"])
