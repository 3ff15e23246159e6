import numpy as np
import pytest

from t2t.core.tensor import ComputeTape, backward, no_grad
from t2t.data.batch import collate
from t2t.exceptions import DatasetError, VocabError
from t2t.lab.tabular import TabularAR, empirical_joint, exact_divergence
from t2t.model.config import ModelConfig
from t2t.model.decoding import sample_batch
from t2t.model.seq2seq import Seq2Seq
from t2t.training.objectives import (
    ikl_decomposition,
    inverse_kl_loss,
    inverse_kl_rows,
    judger_update,
    mle_loss,
    optimise,
)

from conftest import clone, zero_model


@pytest.fixture
def batch():
    return collate([[4, 5], [5, 4, 4]], [[3, 4, 2], [4, 2]])


def test_mle_of_uniform_model_is_log_v(tiny_config, batch):
    model = zero_model(tiny_config)
    assert mle_loss(model, batch).item() == pytest.approx(np.log(5))


def test_mle_is_non_negative(tiny_model, batch):
    assert mle_loss(tiny_model, batch).item() >= 0.0


def test_mle_rejects_empty_batch(tiny_model):
    with pytest.raises(DatasetError):
        mle_loss(tiny_model, collate([], []))


def test_one_step_decreases_the_loss(tiny_model):
    single = collate([[4, 5]], [[3, 4, 2]])
    before = optimise(tiny_model, lambda: mle_loss(tiny_model, single), 1e-3)
    with no_grad():
        after = mle_loss(tiny_model, single).item()
    assert after < before


def test_judger_update_returns_the_pre_step_mle(tiny_model, batch):
    with no_grad():
        expected = mle_loss(tiny_model, batch).item()
    assert judger_update(tiny_model, batch, 0.001) == pytest.approx(expected, abs=1e-12)
    assert tiny_model.store.step == 1


def test_identical_models_have_zero_divergence(tiny_model, batch):
    judger = clone(tiny_model, "judger")
    with no_grad():
        rows = inverse_kl_rows(tiny_model, judger, batch).data
        sampled = inverse_kl_rows(tiny_model, judger, batch, "sampled-token").data
    np.testing.assert_allclose(rows, 0.0, atol=1e-9)
    np.testing.assert_allclose(sampled, 0.0, atol=1e-9)


def test_divergence_is_non_negative(tiny_config, batch):
    gen = Seq2Seq.create(tiny_config, np.random.default_rng(1))
    judger = Seq2Seq.create(tiny_config, np.random.default_rng(2), role="judger")
    with no_grad():
        rows = inverse_kl_rows(gen, judger, batch).data
    assert np.all(rows >= 0.0)


def test_one_step_toy_divergence():
    gen = TabularAR.from_joint(np.array([0.5, 0.3, 0.2]), 3, 1)
    judger = TabularAR.from_joint(np.array([0.2, 0.3, 0.5]), 3, 1)
    with no_grad():
        rows = inverse_kl_rows(gen, judger, collate([[0]], [[0]]), normalize="sequence").data
    assert rows[0] == pytest.approx(0.2749, abs=1e-4)


def test_decomposition_adds_up(tiny_config, batch):
    gen = Seq2Seq.create(tiny_config, np.random.default_rng(1))
    judger = Seq2Seq.create(tiny_config, np.random.default_rng(2), role="judger")
    neg_entropy, cross = ikl_decomposition(gen, judger, batch)
    with no_grad():
        total = float(inverse_kl_rows(gen, judger, batch).data.mean())
    assert neg_entropy + cross == pytest.approx(total, abs=1e-9)
    assert neg_entropy <= 0.0


def test_judger_receives_no_gradient(tiny_config, batch):
    gen = Seq2Seq.create(tiny_config, np.random.default_rng(1))
    judger = Seq2Seq.create(tiny_config, np.random.default_rng(2), role="judger")
    with ComputeTape() as tape:
        loss = inverse_kl_loss(gen, judger, batch, rng=0)
    backward(tape, loss)
    for p in judger.store:
        assert not p.grad.any()
    assert any(p.grad.any() for p in gen.store)


def test_vocabulary_mismatch(tiny_config, tiny_model, batch):
    other = ModelConfig.from_dict({**tiny_config.to_dict(), "vocab_tgt": 7})
    judger = Seq2Seq.create(other, np.random.default_rng(0))
    with pytest.raises(VocabError):
        inverse_kl_loss(tiny_model, judger, batch, rng=0)


def test_unknown_estimator(tiny_model, batch):
    with pytest.raises(ValueError):
        inverse_kl_rows(tiny_model, clone(tiny_model), batch, "made-up")


def test_sampled_estimator_matches_the_exact_divergence():
    rng = np.random.default_rng(0)
    gen = TabularAR.create(3, 3, rng, "full", init_scale=1.0, role="generator")
    judger = TabularAR.create(3, 3, rng, "full", init_scale=1.0, role="judger")
    n = 50000
    contexts = collate([[0]] * n)
    sampled = sample_batch(gen, contexts, 1.0, 3, np.random.default_rng(1))
    with no_grad():
        rows = inverse_kl_rows(gen, judger, sampled, "sampled-token", "sequence").data
    exact = exact_divergence("inverse_kl", judger, gen)
    stderr = rows.std(ddof=1) / np.sqrt(n)
    assert abs(rows.mean() - exact) <= 3 * stderr


def test_loss_uses_its_own_samples(tiny_config, batch):
    gen = Seq2Seq.create(tiny_config, np.random.default_rng(1))
    judger = Seq2Seq.create(tiny_config, np.random.default_rng(2), role="judger")
    with no_grad():
        a = inverse_kl_loss(gen, judger, batch, "sampled-token", rng=4).item()
        b = inverse_kl_loss(gen, judger, batch, "sampled-token", rng=4).item()
    assert a == b


def test_judger_updates_converge_to_the_empirical_distribution():
    rng = np.random.default_rng(0)
    target = TabularAR.from_joint(rng.dirichlet(np.full(9, 5.0)), 3, 2)
    samples = target.sample(400, np.random.default_rng(1))
    judger = TabularAR.create(3, 2, np.random.default_rng(2), "full", role="judger")
    real = collate([[0]] * len(samples), samples)
    for _ in range(2000):
        judger_update(judger, real, 0.05)
    empirical = empirical_joint(np.array(samples), 3, 2)
    assert 0.5 * np.abs(judger.joint() - empirical).sum() < 0.02
