import numpy as np
import pytest
import torch

from promptfill import nn
from promptfill.completion import (
    CompletionModel,
    CompletionTrainConfig,
    FusionConfig,
    chamfer_loss,
    complete,
    load_completion_checkpoint,
    prepare_instance,
    save_completion_checkpoint,
    train_completion,
    write_completion_history_csv,
)
from promptfill.data import build_dataset, default_lexicon, make_benchmark
from promptfill.encoders import (
    EncoderConfig,
    build_vocab,
    prepare_point_graph,
    stack_tokens,
    tokenize,
)
from promptfill.geom import chamfer_l2, uhd

ENC_CFG = EncoderConfig(
    d_point=32, d_text=24, n_centers=16, k_local=8, text_layers=1, text_heads=2, point_heads=2
)
FUS_CFG = FusionConfig(
    d_fuse=32, fusion_blocks=1, decoder_blocks=1, heads=2, n_coarse=8, patch=4, k_query=4,
    use_pretrained=False,
)


@pytest.fixture(scope="module")
def lex():
    return default_lexicon()


@pytest.fixture(scope="module")
def vocab(lex):
    return build_vocab(lex)


@pytest.fixture(scope="module")
def model_store(vocab):
    model = CompletionModel(ENC_CFG, FUS_CFG, vocab)
    return model, model.build_store(0)


@pytest.fixture(scope="module")
def instances(lex):
    shapes, _, _ = build_dataset("chair", 10, seed=0)
    return [make_benchmark(s, seed=i, mode="partnet") for i, s in enumerate(shapes[:4])]


def _encode(model, store, inst, prompt=None):
    graph = prepare_point_graph(inst.partial, model.enc.cfg)
    ids, mask = stack_tokens([tokenize(prompt or inst.gt_prompt, model.vocab)])
    pt, _ = model.enc.encode_points(store, graph)
    tt, _ = model.enc.encode_prompt(store, ids[0], mask[0])
    return graph, pt, tt, mask[0]


class TestFusionConfig:
    def test_mode_validation(self):
        with pytest.raises(ValueError, match="fusion_mode"):
            FusionConfig(fusion_mode="gated")

    def test_missing_size(self):
        assert FusionConfig().missing_size == 64 * 16
        assert FUS_CFG.missing_size == 32

    def test_paper_preset_width(self):
        assert FusionConfig.paper_preset().d_fuse == 1024

    def test_ablation_grid_constructible(self):
        a = FusionConfig(use_pretrained=False, fusion_mode="concat")
        b = FusionConfig(use_pretrained=True, fusion_mode="concat")
        full = FusionConfig(use_pretrained=True, fusion_mode="attention")
        assert (a.use_pretrained, a.fusion_mode) == (False, "concat")
        assert (b.use_pretrained, b.fusion_mode) == (True, "concat")
        assert (full.use_pretrained, full.fusion_mode) == (True, "attention")


class TestFuse:
    def test_pooled_width_both_modes(self, vocab, instances):
        for mode in ("attention", "concat"):
            cfg = FusionConfig(
                d_fuse=32, fusion_blocks=1, decoder_blocks=1, heads=2, n_coarse=8, patch=4,
                k_query=4, fusion_mode=mode, use_pretrained=False,
            )
            model = CompletionModel(ENC_CFG, cfg, vocab)
            store = model.build_store(0)
            graph, pt, tt, mask = _encode(model, store, instances[0])
            seq, fused_p, f_m = model.fuse_features(store, pt, tt, mask)
            assert f_m.shape == (32,)
            assert seq.shape == (ENC_CFG.n_centers + ENC_CFG.max_tokens, 32)
            assert fused_p.shape == (ENC_CFG.n_centers, 32)

    def test_attention_mode_prompt_changes_fm(self, model_store, instances):
        model, store = model_store
        outs = []
        for prompt in ("curved back", "flat back"):
            _, pt, tt, mask = _encode(model, store, instances[0], prompt)
            _, _, f_m = model.fuse_features(store, pt, tt, mask)
            outs.append(f_m)
        assert (outs[0] - outs[1]).norm().item() > 0

    def test_concat_mode_text_row_permutation_invariant(self, vocab, instances):
        # concat mode sees text only through the mean-pooled vector, so
        # permuting the text token rows (same multiset) cannot change f_M
        cfg = FusionConfig(
            d_fuse=32, fusion_blocks=1, decoder_blocks=1, heads=2, n_coarse=8, patch=4,
            k_query=4, fusion_mode="concat", use_pretrained=False,
        )
        model = CompletionModel(ENC_CFG, cfg, vocab)
        store = model.build_store(0).to_dtype(torch.float64)
        graph = prepare_point_graph(instances[0].partial, model.enc.cfg, dtype=torch.float64)
        ids, mask = stack_tokens([tokenize(instances[0].gt_prompt, vocab)])
        pt, _ = model.enc.encode_points(store, graph)
        tt, _ = model.enc.encode_prompt(store, ids[0], mask[0])
        _, _, f_m = model.fuse_features(store, pt, tt, mask[0])
        perm = torch.tensor([1, 0, 3, 2, 5, 4, 7, 6])
        _, _, f_m_perm = model.fuse_features(store, pt, tt[perm], mask[0][perm])
        assert (f_m - f_m_perm).abs().max().item() <= 1e-9


class TestCoarseAndQueries:
    def test_coarse_shape_and_determinism(self, model_store):
        model, store = model_store
        f_m = torch.randn(32, generator=torch.Generator().manual_seed(0))
        a = model.coarse_from_fused(store, f_m)
        b = model.coarse_from_fused(store, f_m)
        assert a.shape == (8, 3)
        np.testing.assert_array_equal(a.detach().numpy(), b.detach().numpy())

    def test_query_shape(self, model_store):
        model, store = model_store
        gen = torch.Generator().manual_seed(1)
        f_m = torch.randn(32, generator=gen)
        coarse = torch.randn(8, 3, generator=gen)
        q = model.generate_queries(store, f_m, coarse)
        assert q.shape == (8, 32)

    def test_identical_coarse_points_identical_proxies(self, model_store):
        model, store = model_store
        gen = torch.Generator().manual_seed(2)
        f_m = torch.randn(32, generator=gen)
        coarse = torch.randn(8, 3, generator=gen)
        coarse[3] = coarse[5]
        q = model.generate_queries(store, f_m, coarse)
        np.testing.assert_array_equal(q[3].detach().numpy(), q[5].detach().numpy())

    def test_permutation_equivariance(self, model_store):
        model, store = model_store
        gen = torch.Generator().manual_seed(3)
        f_m = torch.randn(32, generator=gen)
        coarse = torch.randn(8, 3, generator=gen)
        perm = torch.randperm(8, generator=gen)
        q = model.generate_queries(store, f_m, coarse)
        q_perm = model.generate_queries(store, f_m, coarse[perm])
        np.testing.assert_allclose(
            q_perm.detach().numpy(), q[perm].detach().numpy(), atol=1e-6
        )


class TestDecode:
    def test_full_gating_matches_ungated(self, vocab, instances):
        cfg = FusionConfig(
            d_fuse=32, fusion_blocks=1, decoder_blocks=2, heads=2, n_coarse=8, patch=4,
            k_query=ENC_CFG.n_centers, use_pretrained=False,
        )
        model = CompletionModel(ENC_CFG, cfg, vocab)
        store = model.build_store(0).to_dtype(torch.float64)
        graph = prepare_point_graph(instances[0].partial, model.enc.cfg, dtype=torch.float64)
        ids, mask = stack_tokens([tokenize(instances[0].gt_prompt, vocab)])
        pt, _ = model.enc.encode_points(store, graph)
        tt, _ = model.enc.encode_prompt(store, ids[0], mask[0])
        _, fused_p, f_m = model.fuse_features(store, pt, tt, mask[0])
        coarse = model.coarse_from_fused(store, f_m)
        proxies = model.generate_queries(store, f_m, coarse)
        gated = model.decode(store, proxies, fused_p, coarse, graph.centers.numpy())
        # ungated reference: every proxy attends to all fused point tokens
        ref = proxies
        m = cfg.n_coarse
        for i in range(cfg.decoder_blocks):
            ref = nn.attn_block(store, f"dec.b{i}.self", ref, ref, ref, cfg.heads)
            kv = fused_p.unsqueeze(0).expand(m, -1, -1)
            out = nn.attn_block(store, f"dec.b{i}.cross", ref.unsqueeze(-2), kv, kv, cfg.heads)
            ref = out.squeeze(-2)
        assert (gated - ref).abs().max().item() <= 1e-9

    def test_output_shape(self, model_store, instances):
        model, store = model_store
        graph = prepare_point_graph(instances[0].partial, model.enc.cfg)
        out = complete(model, store, instances[0].partial, instances[0].gt_prompt)
        assert len(out.coarse) == 8
        assert len(out.missing) == 32

    def test_k_query_too_large_errors(self, vocab, instances):
        cfg = FusionConfig(
            d_fuse=32, fusion_blocks=1, decoder_blocks=1, heads=2, n_coarse=8, patch=4,
            k_query=ENC_CFG.n_centers + 1, use_pretrained=False,
        )
        model = CompletionModel(ENC_CFG, cfg, vocab)
        store = model.build_store(0)
        with pytest.raises(ValueError, match="k_query"):
            complete(model, store, instances[0].partial, instances[0].gt_prompt)


class TestFold:
    def test_zero_final_layer_returns_centers(self, model_store):
        model, store = model_store
        gen = torch.Generator().manual_seed(4)
        proxies = torch.randn(8, 32, generator=gen)
        coarse = torch.randn(8, 3, generator=gen)
        with torch.no_grad():
            w_save = store["fold.fc3.w"].clone()
            b_save = store["fold.fc3.b"].clone()
            store["fold.fc3.w"].zero_()
            store["fold.fc3.b"].zero_()
        try:
            pts = model.fold(store, proxies, coarse)
            expect = coarse.unsqueeze(1).expand(8, 4, 3).reshape(32, 3)
            np.testing.assert_array_equal(pts.detach().numpy(), expect.numpy())
        finally:
            with torch.no_grad():
                store["fold.fc3.w"].copy_(w_save)
                store["fold.fc3.b"].copy_(b_save)

    def test_identical_proxies_identical_patches(self, model_store):
        model, store = model_store
        gen = torch.Generator().manual_seed(5)
        proxies = torch.randn(8, 32, generator=gen)
        coarse = torch.randn(8, 3, generator=gen)
        proxies[2] = proxies[6]
        coarse[2] = coarse[6]
        pts = model.fold(store, proxies, coarse).reshape(8, 4, 3)
        np.testing.assert_array_equal(pts[2].detach().numpy(), pts[6].detach().numpy())


class TestComplete:
    def test_full_size_and_prefix(self, model_store, instances):
        model, store = model_store
        inst = instances[0]
        out = complete(model, store, inst.partial, inst.gt_prompt)
        assert len(out.full) == len(inst.partial) + FUS_CFG.missing_size
        np.testing.assert_array_equal(
            out.full.points[: len(inst.partial)], inst.partial.points
        )

    def test_uhd_partial_full_zero(self, model_store, instances):
        model, store = model_store
        inst = instances[1]
        out = complete(model, store, inst.partial, inst.gt_prompt)
        assert uhd(inst.partial, out.full) == 0.0

    def test_partial_permutation_leaves_missing_bit_identical(self, model_store, instances):
        model, store = model_store
        inst = instances[2]
        out1 = complete(model, store, inst.partial, inst.gt_prompt)
        rng = np.random.default_rng(0)
        perm = rng.permutation(len(inst.partial))
        out2 = complete(model, store, inst.partial.points[perm], inst.gt_prompt)
        np.testing.assert_array_equal(out1.missing.points, out2.missing.points)

    def test_deterministic(self, model_store, instances):
        model, store = model_store
        inst = instances[3]
        a = complete(model, store, inst.partial, inst.gt_prompt)
        b = complete(model, store, inst.partial, inst.gt_prompt)
        np.testing.assert_array_equal(a.missing.points, b.missing.points)


class TestChamferLoss:
    def test_matches_geom_metric(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(60, 3))
        b = rng.normal(size=(45, 3))
        t = chamfer_loss(torch.from_numpy(a), torch.from_numpy(b)).item()
        assert abs(t - chamfer_l2(a, b)) < 1e-9

    def test_identity_zero(self):
        a = torch.randn(20, 3, dtype=torch.float64)
        assert chamfer_loss(a, a).item() < 1e-12


class TestGradsThroughPipeline:
    def test_grad_check_full_loss(self, vocab, instances):
        model = CompletionModel(ENC_CFG, FUS_CFG, vocab)
        store = model.build_store(3).to_dtype(torch.float64)
        inst = instances[0]
        graph = prepare_point_graph(inst.partial, model.enc.cfg, dtype=torch.float64)
        ids, mask = stack_tokens([tokenize(inst.gt_prompt, vocab)])
        gt = torch.from_numpy(inst.gt_missing.points)
        coarse_target = gt[: FUS_CFG.n_coarse]

        def loss():
            coarse, missing = model.forward(store, graph, ids[0], mask[0])
            return chamfer_loss(missing, gt) + chamfer_loss(coarse, coarse_target)

        assert nn.grad_check(loss, store, probes=60) < 1e-4


class TestTraining:
    def test_loss_decreases(self, instances, lex):
        cfg = CompletionTrainConfig(epochs=8, lr=1e-3, seed=0)
        res = train_completion(instances, ENC_CFG, FUS_CFG, cfg, lexicon=lex)
        assert res.history[-1][1] < res.history[0][1]

    def test_empty_dataset_errors(self, lex):
        with pytest.raises(ValueError, match="empty"):
            train_completion([], ENC_CFG, FUS_CFG, CompletionTrainConfig(), lexicon=lex)

    def test_deterministic(self, instances, lex):
        cfg = CompletionTrainConfig(epochs=2, lr=1e-3, seed=5)
        r1 = train_completion(instances, ENC_CFG, FUS_CFG, cfg, lexicon=lex)
        r2 = train_completion(instances, ENC_CFG, FUS_CFG, cfg, lexicon=lex)
        assert r1.history == r2.history
        for (n1, p1), (n2, p2) in zip(r1.store.items(), r2.store.items()):
            np.testing.assert_array_equal(p1.detach().numpy(), p2.detach().numpy())

    def test_use_pretrained_changes_epoch0(self, instances, lex):
        from promptfill.pretrain import PretrainConfig, run_pretraining

        shapes, split, _ = build_dataset("chair", 10, seed=40)
        pre = run_pretraining(
            shapes, split.train, [], ENC_CFG, PretrainConfig(batch=8, epochs=1, seed=0), lex
        )
        arrays = pre.store.arrays()
        cfg_scratch = FUS_CFG
        cfg_pre = FusionConfig(
            d_fuse=32, fusion_blocks=1, decoder_blocks=1, heads=2, n_coarse=8, patch=4,
            k_query=4, use_pretrained=True,
        )
        t_cfg = CompletionTrainConfig(epochs=1, lr=1e-3, seed=0)
        r_scratch = train_completion(instances, ENC_CFG, cfg_scratch, t_cfg, lexicon=lex)
        r_pre = train_completion(
            instances, ENC_CFG, cfg_pre, t_cfg, pretrained=(pre.encoders, arrays)
        )
        assert r_scratch.history[0][1] != r_pre.history[0][1]

    def test_freeze_encoders(self, instances, lex):
        from promptfill.pretrain import PretrainConfig, run_pretraining

        shapes, split, _ = build_dataset("chair", 10, seed=41)
        pre = run_pretraining(
            shapes, split.train, [], ENC_CFG, PretrainConfig(batch=8, epochs=1, seed=0), lex
        )
        cfg = FusionConfig(
            d_fuse=32, fusion_blocks=1, decoder_blocks=1, heads=2, n_coarse=8, patch=4,
            k_query=4, use_pretrained=True, freeze_encoders=True,
        )
        res = train_completion(
            instances, ENC_CFG, cfg, CompletionTrainConfig(epochs=2, lr=1e-3, seed=0),
            pretrained=(pre.encoders, pre.store.arrays()),
        )
        for name, arr in pre.store.arrays().items():
            if name.startswith(("point.", "text.")):
                np.testing.assert_array_equal(res.store[name].detach().numpy(), arr)

    def test_checkpoint_roundtrip(self, instances, lex, tmp_path):
        cfg = CompletionTrainConfig(epochs=1, lr=1e-3, seed=2)
        res = train_completion(instances, ENC_CFG, FUS_CFG, cfg, lexicon=lex)
        inst = instances[0]
        before = complete(res.model, res.store, inst.partial, inst.gt_prompt)
        path = tmp_path / "model.ckpt"
        save_completion_checkpoint(path, res, cfg)
        model2, store2, config = load_completion_checkpoint(path)
        after = complete(model2, store2, inst.partial, inst.gt_prompt)
        np.testing.assert_array_equal(before.missing.points, after.missing.points)
        assert config["fusion"]["n_coarse"] == 8

    def test_history_csv(self, tmp_path):
        rows = [(0, 0.5, None, 0.4)]
        path = tmp_path / "hist.csv"
        write_completion_history_csv(path, rows)
        lines = path.read_text().splitlines()
        assert lines[0] == "epoch,train_cd,val_cd,coarse_term"
