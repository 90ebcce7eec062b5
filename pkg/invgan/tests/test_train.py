import math

import pytest
import torch

from invgan.critic import Critic
from invgan.embedder import ToyEmbedder
from invgan.errors import MalformedFileError, TrainingDivergedError
from invgan.generator import Generator, GeneratorSpec
from invgan.images import synth_images
from invgan.losses import LossWeights, embedding_loss, recovery_loss
from invgan.train import (
    EpochRecord,
    TrainConfig,
    load_curve_csv,
    save_curve_csv,
    train,
)


@pytest.fixture(scope="module")
def tiny_data():
    imgs = torch.from_numpy(synth_images(8, seed=5))
    emb = ToyEmbedder("target")
    with torch.no_grad():
        embs = emb(imgs)
    return imgs, embs, emb


def _fresh_models():
    return Generator(GeneratorSpec(), seed=3), Critic(seed=4)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(lr=0.0)
    with pytest.raises(ValueError):
        TrainConfig(lr_decay_per_epoch=1.0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(gen_steps_per_disc_step=0)
    with pytest.raises(ValueError):
        TrainConfig(gradient_penalty_weight=-1.0)


def test_smoke_run_produces_epoch_records(tiny_data):
    imgs, embs, emb = tiny_data
    gen, cr = _fresh_models()
    cfg = TrainConfig(epochs=2, batch_size=8, seed=0)
    records = train(gen, cr, imgs, embs, LossWeights(), cfg, assistant=emb)
    assert [r.epoch for r in records] == [1, 2]
    for r in records:
        assert math.isfinite(r.l_r) and math.isfinite(r.l_d) and math.isfinite(r.l_e)
        assert math.isnan(r.success_rate)  # no judger supplied


def test_judger_fills_success_column(tiny_data):
    imgs, embs, emb = tiny_data
    gen, cr = _fresh_models()
    cfg = TrainConfig(epochs=1, batch_size=8, seed=0)
    records = train(gen, cr, imgs, embs, LossWeights(), cfg, assistant=emb, judger=emb)
    assert 0.0 <= records[0].success_rate <= 1.0


def test_black_box_runs_with_zero_embedding_term(tiny_data):
    imgs, embs, _ = tiny_data
    gen, cr = _fresh_models()
    cfg = TrainConfig(epochs=1, batch_size=8, seed=0)
    records = train(gen, cr, imgs, embs, LossWeights(), cfg, assistant=None)
    assert records[0].l_e == 0.0


def test_rejects_empty_and_mismatched_data(tiny_data):
    imgs, embs, emb = tiny_data
    gen, cr = _fresh_models()
    with pytest.raises(ValueError):
        train(gen, cr, imgs[:0], embs[:0], LossWeights(), TrainConfig(epochs=1))
    with pytest.raises(ValueError):
        train(gen, cr, imgs, embs[:4], LossWeights(), TrainConfig(epochs=1))


def test_divergence_aborts_with_clear_error(tiny_data):
    imgs, embs, emb = tiny_data
    gen, cr = _fresh_models()
    cfg = TrainConfig(epochs=3, lr=1e6, batch_size=8, seed=0)
    with pytest.raises(TrainingDivergedError):
        train(gen, cr, imgs, embs, LossWeights(), cfg, assistant=emb)


def test_fixed_seed_reproduces_loss_curve(tiny_data):
    imgs, embs, emb = tiny_data

    def run():
        torch.manual_seed(999)  # pollute global state; training must not care
        gen, cr = _fresh_models()
        cfg = TrainConfig(epochs=2, batch_size=8, seed=0)
        return train(gen, cr, imgs, embs, LossWeights(), cfg, assistant=emb, judger=emb)

    a, b = run(), run()
    for ra, rb in zip(a, b):
        assert ra.l_r == pytest.approx(rb.l_r, abs=1e-4)
        assert ra.l_d == pytest.approx(rb.l_d, abs=1e-4)
        assert ra.l_e == pytest.approx(rb.l_e, abs=1e-4)
        assert ra.success_rate == rb.success_rate


def test_scaling_all_weights_scales_the_gradient(tiny_data):
    # the update direction only depends on the ratio between the three
    # weights; a common factor must multiply the whole gradient
    imgs, embs, emb = tiny_data

    def grads(scale):
        gen, cr = _fresh_models()
        w = LossWeights(w_r=3.0 * scale, w_d=1.0 * scale, w_e=1.0 * scale)
        recon = gen(embs)
        total = (
            w.w_r * recovery_loss(imgs, recon)
            + w.w_d * (-cr(recon).mean())
            + w.w_e * embedding_loss(emb, imgs, recon)
        )
        gen.zero_grad()
        total.backward()
        return torch.cat([p.grad.flatten() for p in gen.parameters()])

    g1, g2 = grads(1.0), grads(2.0)
    assert float((g2 - 2.0 * g1).abs().max()) <= 1e-6 * float(g1.abs().max())


def test_curve_csv_roundtrip(tmp_path):
    records = [
        EpochRecord(1, 0.5, -1.25, 0.375, float("nan")),
        EpochRecord(2, 0.420001, -1.0, 0.25, 0.75),
    ]
    path = tmp_path / "curve.csv"
    save_curve_csv(records, path)
    assert path.read_text().splitlines()[0] == "epoch,L_r,L_d,L_e,success_rate"
    back = load_curve_csv(path)
    assert [r.epoch for r in back] == [1, 2]
    assert back[0].l_r == 0.5 and back[1].l_r == 0.420001
    assert math.isnan(back[0].success_rate) and back[1].success_rate == 0.75


def test_curve_csv_rejects_malformed_files(tmp_path):
    bad_header = tmp_path / "a.csv"
    bad_header.write_text("epoch,loss\n1,0.5\n")
    with pytest.raises(MalformedFileError):
        load_curve_csv(bad_header)
    bad_row = tmp_path / "b.csv"
    bad_row.write_text("epoch,L_r,L_d,L_e,success_rate\n1,0.5,0.1\n")
    with pytest.raises(MalformedFileError):
        load_curve_csv(bad_row)
