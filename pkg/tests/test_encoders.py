import numpy as np
import pytest
import torch

from promptfill import nn
from promptfill.data import default_lexicon, generate_shape
from promptfill.encoders import (
    PAD_ID,
    UNK_ID,
    EncoderConfig,
    Encoders,
    build_vocab,
    has_oov,
    load_vocab_json,
    prepare_point_graph,
    save_vocab_json,
    stack_tokens,
    tokenize,
)


@pytest.fixture(scope="module")
def vocab():
    return build_vocab(default_lexicon())


@pytest.fixture(scope="module")
def small_cfg():
    return EncoderConfig(d_point=32, d_text=24, n_centers=16, k_local=8, text_layers=1, text_heads=2, point_heads=2)


@pytest.fixture(scope="module")
def encoders_with_store(small_cfg, vocab):
    enc = Encoders(small_cfg, vocab)
    store = nn.ParamStore()
    enc.init_params(store, nn.seeded_generator(0))
    return enc, store


class TestConfig:
    def test_embed_width_pinned(self):
        with pytest.raises(ValueError, match="256"):
            EncoderConfig(d_embed=128)

    def test_paper_preset_text_width(self):
        assert EncoderConfig.paper_preset().d_text == 768
        assert EncoderConfig.paper_preset().d_embed == 256


class TestTokenize:
    def test_known_words(self, vocab):
        seq = tokenize("curved back", vocab)
        assert seq.ids[0] == vocab.index("curved")
        assert seq.ids[1] == vocab.index("back")
        assert (seq.ids[2:] == PAD_ID).all()
        assert seq.mask.tolist() == [True, True] + [False] * 6

    def test_unknown_word_maps_to_unk(self, vocab):
        seq = tokenize("zzz back", vocab)
        assert seq.ids[0] == UNK_ID
        assert seq.ids[1] == vocab.index("back")

    def test_case_insensitive(self, vocab):
        a = tokenize("Curved Back", vocab)
        b = tokenize("curved back", vocab)
        np.testing.assert_array_equal(a.ids, b.ids)

    def test_empty_errors(self, vocab):
        with pytest.raises(ValueError, match="empty"):
            tokenize("", vocab)
        with pytest.raises(ValueError, match="empty"):
            tokenize("   ", vocab)

    def test_truncates_to_max(self, vocab):
        seq = tokenize("curved " * 12 + "back", vocab)
        assert len(seq.ids) == 8
        assert seq.mask.all()

    def test_has_oov(self, vocab):
        assert has_oov("floofy back", vocab)
        assert not has_oov("curved back", vocab)

    def test_vocab_roundtrip(self, vocab, tmp_path):
        path = tmp_path / "vocab.json"
        save_vocab_json(path, vocab)
        assert load_vocab_json(path) == vocab


class TestTextEncoder:
    def test_deterministic(self, encoders_with_store, vocab):
        enc, store = encoders_with_store
        ids, mask = stack_tokens([tokenize("curved back", vocab)])
        _, a = enc.encode_prompt(store, ids, mask)
        _, b = enc.encode_prompt(store, ids, mask)
        np.testing.assert_array_equal(a.detach().numpy(), b.detach().numpy())

    def test_pad_embedding_has_no_influence(self, encoders_with_store, vocab):
        enc, store = encoders_with_store
        ids, mask = stack_tokens([tokenize("curved back", vocab)])
        _, before = enc.encode_prompt(store, ids, mask)
        before = before.detach().clone()
        with torch.no_grad():
            store["text.tok.table"][PAD_ID] += 37.5
        try:
            _, after = enc.encode_prompt(store, ids, mask)
            np.testing.assert_array_equal(before.numpy(), after.detach().numpy())
        finally:
            with torch.no_grad():
                store["text.tok.table"][PAD_ID] -= 37.5

    def test_different_prompts_differ(self, encoders_with_store, vocab):
        enc, store = encoders_with_store
        ids, mask = stack_tokens([tokenize("curved back", vocab), tokenize("flat back", vocab)])
        _, pooled = enc.encode_prompt(store, ids, mask)
        diff = (pooled[0] - pooled[1]).norm().item()
        assert diff > 0

    def test_pooled_width(self, encoders_with_store, vocab, small_cfg):
        enc, store = encoders_with_store
        ids, mask = stack_tokens([tokenize("flat seat", vocab)])
        seq, pooled = enc.encode_prompt(store, ids, mask)
        assert seq.shape == (1, 8, small_cfg.d_text)
        assert pooled.shape == (1, small_cfg.d_text)


class TestPointEncoder:
    def _cloud(self, seed=0, n=256):
        rng = np.random.default_rng(seed)
        return rng.normal(size=(n, 3)) * 0.5

    def test_permutation_invariance_bit_level(self, encoders_with_store, small_cfg):
        enc, store = encoders_with_store
        pts = self._cloud(1)
        g1 = prepare_point_graph(pts, small_cfg)
        rng = np.random.default_rng(2)
        perm = rng.permutation(len(pts))
        g2 = prepare_point_graph(pts[perm], small_cfg)
        t1, p1 = enc.encode_points(store, g1)
        t2, p2 = enc.encode_points(store, g2)
        np.testing.assert_array_equal(p1.detach().numpy(), p2.detach().numpy())
        np.testing.assert_array_equal(t1.detach().numpy(), t2.detach().numpy())

    def test_identical_clouds_identical_features(self, encoders_with_store, small_cfg):
        enc, store = encoders_with_store
        pts = self._cloud(3)
        _, a = enc.encode_points(store, prepare_point_graph(pts, small_cfg))
        _, b = enc.encode_points(store, prepare_point_graph(pts.copy(), small_cfg))
        np.testing.assert_array_equal(a.detach().numpy(), b.detach().numpy())

    def test_different_geometry_differs(self, small_cfg, vocab):
        enc = Encoders(small_cfg, vocab)
        store = nn.ParamStore()
        enc.init_params(store, nn.seeded_generator(5))
        flat = generate_shape("chair", 0, family_overrides={"back": "flat back"}).part("back")
        curved = generate_shape("chair", 0, family_overrides={"back": "curved back"}).part("back")
        _, a = enc.encode_points(store, prepare_point_graph(flat.cloud, small_cfg))
        _, b = enc.encode_points(store, prepare_point_graph(curved.cloud, small_cfg))
        assert (a - b).norm().item() > 0

    def test_too_few_points_errors(self, small_cfg):
        with pytest.raises(ValueError, match="n_centers"):
            prepare_point_graph(np.zeros((4, 3)), small_cfg)

    def test_token_shape(self, encoders_with_store, small_cfg):
        enc, store = encoders_with_store
        tokens, pooled = enc.encode_points(store, prepare_point_graph(self._cloud(), small_cfg))
        assert tokens.shape == (small_cfg.n_centers, small_cfg.d_point)
        assert pooled.shape == (small_cfg.d_point,)


class TestProjection:
    def test_output_is_256(self, encoders_with_store, small_cfg):
        enc, store = encoders_with_store
        z = enc.project(store, torch.zeros(small_cfg.d_point), "point")
        assert z.shape == (256,)
        z = enc.project(store, torch.zeros(small_cfg.d_text), "text")
        assert z.shape == (256,)

    def test_zero_input_gives_bias_path(self, encoders_with_store, small_cfg):
        enc, store = encoders_with_store
        a = enc.project(store, torch.zeros(small_cfg.d_point), "point")
        b = enc.project(store, torch.zeros(small_cfg.d_point), "point")
        np.testing.assert_array_equal(a.detach().numpy(), b.detach().numpy())

    def test_nonlinear_in_scale(self, encoders_with_store, small_cfg):
        enc, store = encoders_with_store
        gen = nn.seeded_generator(9)
        x = torch.empty(small_cfg.d_point).uniform_(-1, 1, generator=gen)
        z1 = enc.project(store, x, "point")
        z2 = enc.project(store, 2 * x, "point")
        assert (z2 - 2 * z1).abs().max().item() > 1e-4

    def test_unknown_head_errors(self, encoders_with_store):
        enc, store = encoders_with_store
        with pytest.raises(ValueError):
            enc.project(store, torch.zeros(4), "audio")


class TestGradFlow:
    def test_grad_check_both_paths(self, vocab):
        cfg = EncoderConfig(d_point=16, d_text=16, n_centers=8, k_local=4, text_layers=1, text_heads=2, point_heads=2)
        enc = Encoders(cfg, vocab)
        store = nn.ParamStore()
        enc.init_params(store, nn.seeded_generator(3))
        store64 = store.to_dtype(torch.float64)
        rng = np.random.default_rng(0)
        graph = prepare_point_graph(rng.normal(size=(64, 3)), cfg, dtype=torch.float64)
        ids, mask = stack_tokens([tokenize("curved back", vocab)])

        def loss():
            _, fp = enc.encode_points(store64, graph)
            zp = enc.project(store64, fp, "point")
            _, ft = enc.encode_prompt(store64, ids, mask)
            zt = enc.project(store64, ft[0], "text")
            return (zp**2).mean() + (zt**2).mean()

        assert nn.grad_check(loss, store64, probes=60) < 1e-4
