import numpy as np
import pytest

from t2t.core.params import ParameterStore
from t2t.core.tensor import constant, no_grad, zeros
from t2t.data.batch import EOS, collate
from t2t.exceptions import ShapeError, VocabError
from t2t.model.config import ModelConfig
from t2t.model.decoding import greedy_decode, sample_sequence, sequence_log_prob, sequence_log_probs
from t2t.model.seq2seq import LSTMWeights, Seq2Seq, lstm_cell_step

from conftest import zero_model


def test_parameter_layout(tiny_model):
    assert tiny_model.store.names() == list(Seq2Seq.parameter_shapes(tiny_model.config))
    assert tiny_model.store.value("dec.W_c").shape == (4, 16)
    assert tiny_model.store.value("att.v_a").shape == (4, 1)


def test_scaled_init_zeroes_biases(tiny_model):
    for name in ("enc.b", "dec.b", "out.b_z", "out.b"):
        assert not tiny_model.store.value(name).any()


def test_unit_init_is_standard_normal(tiny_config, rng):
    tiny_config.init_scheme = "unit"
    model = Seq2Seq.create(tiny_config, rng)
    assert model.store.value("enc.b").any()


def test_lstm_zero_weights_keep_zero_state():
    w = LSTMWeights(zeros((3, 8)), zeros((2, 8)), zeros((8,)))
    h, c = lstm_cell_step(constant(np.ones((1, 3))), (zeros((1, 2)), zeros((1, 2))), w)
    np.testing.assert_array_equal(h.data, np.zeros((1, 2)))
    np.testing.assert_array_equal(c.data, np.zeros((1, 2)))


def test_lstm_open_forget_gate_keeps_zero_cell():
    b = np.zeros(8)
    b[2:4] = 50.0
    w = LSTMWeights(zeros((3, 8)), zeros((2, 8)), constant(b))
    _, c = lstm_cell_step(zeros((1, 3)), (zeros((1, 2)), zeros((1, 2))), w)
    np.testing.assert_allclose(c.data, 0.0, atol=1e-12)


def test_lstm_shape_mismatch():
    w = LSTMWeights(zeros((3, 8)), zeros((2, 8)), zeros((8,)))
    with pytest.raises(ShapeError):
        lstm_cell_step(zeros((1, 4)), (zeros((1, 2)), zeros((1, 2))), w)


def test_encoder_rejects_empty_source(tiny_model):
    with pytest.raises(ShapeError):
        tiny_model.encode(np.zeros((1, 0), dtype=np.int64))


def test_encoder_rejects_out_of_vocab(tiny_model):
    with pytest.raises(VocabError):
        tiny_model.encode(np.array([[6]]))


def test_single_token_encoder_is_one_lstm_step(tiny_model):
    enc = tiny_model.encode(np.array([[4]]))
    s = tiny_model.store
    x = constant(s.value("enc.embed")[[4]])
    h, _ = lstm_cell_step(x, (zeros((1, 4)), zeros((1, 4))),
                          LSTMWeights(s["enc.W_x"], s["enc.W_h"], s["enc.b"]))
    assert len(enc.states) == 1
    np.testing.assert_array_equal(enc.states[0].data, h.data)


def test_encoder_is_deterministic(tiny_model):
    a = tiny_model.encode(np.array([[4, 5, 1]]))
    b = tiny_model.encode(np.array([[4, 5, 1]]))
    for x, y in zip(a.states, b.states):
        np.testing.assert_array_equal(x.data, y.data)


def test_attention_over_one_position_is_the_state(tiny_model):
    enc = tiny_model.encode(np.array([[4]]))
    context, alpha = tiny_model.attention_context(enc, constant(np.ones((1, 4))))
    np.testing.assert_allclose(alpha.data, [[1.0]])
    np.testing.assert_allclose(context.data, enc.states[0].data)


def test_masked_positions_get_no_attention(tiny_model):
    batch = collate([[4, 5, 4], [5, 4]])
    enc = tiny_model.encode(batch.src, batch.src_mask)
    _, alpha = tiny_model.attention_context(enc, constant(np.full((2, 4), 0.3)))
    assert alpha.data[1, 2] == 0.0
    np.testing.assert_allclose(alpha.data.sum(axis=1), 1.0)


def test_last_state_follows_the_mask(tiny_model):
    batch = collate([[4, 5, 4], [5, 4]])
    enc = tiny_model.encode(batch.src, batch.src_mask)
    np.testing.assert_array_equal(enc.last.data[1], enc.states[1].data[1])
    np.testing.assert_array_equal(enc.last.data[0], enc.states[2].data[0])


def test_decode_step_is_a_distribution(tiny_model):
    enc = tiny_model.encode(np.array([[4, 5]]))
    p, state = tiny_model.decode_step(tiny_model.initial_state(1), None, enc)
    assert p.shape == (1, 5)
    np.testing.assert_allclose(p.data.sum(), 1.0)
    assert state.t == 2


def test_zero_weights_give_uniform_predictions(tiny_config):
    model = zero_model(tiny_config)
    enc = model.encode(np.array([[4, 5]]))
    p, _ = model.decode_step(model.initial_state(1), None, enc)
    np.testing.assert_allclose(p.data, np.full((1, 5), 0.2))


def test_uniform_model_scores_length_times_log_v():
    config = ModelConfig(vocab_src=5, vocab_tgt=4, embed_dim=2, hidden_dim=3, output_dim=3)
    model = zero_model(config)
    assert sequence_log_prob(model, [4, 4], [1, 3, 2]) == pytest.approx(3 * np.log(0.25))


def test_sequence_log_prob_is_the_sum_of_steps(tiny_model):
    src, tgt = [4, 5, 1], [3, 4, 4, 1, 2]
    total = 0.0
    with no_grad():
        enc = tiny_model.encode(np.array([src]))
        state = tiny_model.initial_state(1)
        y_prev = None
        for tok in tgt:
            p, state = tiny_model.decode_step(state, y_prev, enc)
            total += np.log(p.data[0, tok])
            y_prev = np.array([tok])
    assert tiny_model.sequence_log_prob(src, tgt) == pytest.approx(total, abs=1e-10)


def test_padding_does_not_change_scores(tiny_model):
    alone = collate([[4, 5]], [[3, 4, 2]])
    padded = collate([[4, 5], [4, 5, 4, 5]], [[3, 4, 2], [3, 3, 3, 3, 2]])
    with no_grad():
        a = sequence_log_probs(tiny_model, alone).data[0]
        b = sequence_log_probs(tiny_model, padded).data[0]
    assert a == pytest.approx(b, abs=1e-12)


def test_out_of_vocab_target_is_rejected(tiny_model):
    with pytest.raises(VocabError):
        tiny_model.sequence_log_prob([4], [7])


def test_greedy_on_uniform_model_picks_lowest_id(tiny_config):
    model = zero_model(tiny_config)
    assert model.greedy_decode([4, 5], max_len=4) == [0, 0, 0, 0]


def test_explicit_zero_length_is_rejected(tiny_model):
    with pytest.raises(ValueError):
        tiny_model.greedy_decode([4, 5], max_len=0)
    with pytest.raises(ValueError):
        tiny_model.sample_sequence([4, 5], max_len=0, rng_seed=0)


def test_greedy_stops_at_eos(tiny_config):
    model = zero_model(tiny_config)
    bias = np.zeros(5)
    bias[EOS] = 5.0
    model.store.assign("out.b", bias)
    assert model.greedy_decode([4]) == [EOS]


def test_sampling_is_reproducible(tiny_model):
    a = tiny_model.sample_sequence([4, 5], rng_seed=7)
    b = tiny_model.sample_sequence([4, 5], rng_seed=7)
    assert a == b
    assert 1 <= len(a) <= tiny_model.max_len


def test_low_temperature_sampling_is_greedy(tiny_model):
    batch = collate([[4, 5], [5]])
    greedy = greedy_decode(tiny_model, batch.src, batch.src_mask, 5)
    cold = sample_sequence(tiny_model, batch.src, batch.src_mask, 1e-8, 5, 3)
    assert cold == greedy


def test_non_positive_temperature_is_rejected(tiny_model):
    batch = collate([[4]])
    with pytest.raises(ValueError):
        sample_sequence(tiny_model, batch.src, batch.src_mask, 0.0, 5, 0)


def test_first_token_frequencies_follow_the_model(tiny_config):
    tiny_config.init_scale = 1.0
    model = Seq2Seq.create(tiny_config, np.random.default_rng(11))
    n = 10000
    batch = collate([[4, 5]] * n)
    draws = sample_sequence(model, batch.src, batch.src_mask, 1.0, 1, np.random.default_rng(5))
    counts = np.bincount([d[0] for d in draws], minlength=5)
    enc = model.encode(np.array([[4, 5]]))
    with no_grad():
        p, _ = model.decode_step(model.initial_state(1), None, enc)
    expected = p.data[0] * n
    sigma = np.sqrt(n * p.data[0] * (1 - p.data[0]))
    assert np.all(np.abs(counts - expected) <= 4 * sigma + 1)


def test_store_layout_must_match_config(tiny_config, rng):
    model = Seq2Seq.create(tiny_config, rng)
    other = ModelConfig.from_dict({**tiny_config.to_dict(), "hidden_dim": 5})
    with pytest.raises(ShapeError):
        Seq2Seq(other, model.store)
    with pytest.raises(ShapeError):
        Seq2Seq(tiny_config, ParameterStore())


def test_checkpoint_round_trip(tmp_path, tiny_model):
    path = tmp_path / "generator.json"
    tiny_model.store.save(path)
    loaded = Seq2Seq(tiny_model.config, ParameterStore.load(path))
    assert loaded.sequence_log_prob([4, 5], [3, 2]) == tiny_model.sequence_log_prob([4, 5], [3, 2])
