import pytest
import torch

from invgan.generator import Generator, GeneratorSpec, ResidualUnit


def test_spec_defaults_are_consistent():
    s = GeneratorSpec()
    assert s.merge_size * 2**s.upsample_stages == s.image_size
    assert s.merged_channels == s.rapid_channels + s.mild_channels


def test_spec_rejects_unreachable_image_size():
    with pytest.raises(ValueError):
        GeneratorSpec(merge_size=8, upsample_stages=1, image_size=32)


def test_spec_rejects_nonnesting_mild_branch():
    with pytest.raises(ValueError):
        GeneratorSpec(mild_mid_size=3)  # 8 % 3 != 0


def test_spec_rejects_nonpositive_fields():
    with pytest.raises(ValueError):
        GeneratorSpec(rapid_channels=0)


def test_residual_unit_preserves_shape():
    unit = ResidualUnit(6)
    x = torch.randn(3, 6, 9, 11, generator=torch.Generator().manual_seed(0))
    assert unit(x).shape == x.shape


@pytest.mark.parametrize("batch", [1, 2, 7])
def test_output_shape_and_range(batch):
    spec = GeneratorSpec()
    gen = Generator(spec, seed=1)
    z = torch.randn(batch, spec.embedding_dim, generator=torch.Generator().manual_seed(3))
    with torch.no_grad():
        out = gen(z)
    assert out.shape == (batch, spec.out_channels, spec.image_size, spec.image_size)
    assert float(out.min()) >= 0.0 and float(out.max()) <= 1.0


def test_custom_spec_shapes():
    spec = GeneratorSpec(
        embedding_dim=16,
        merge_size=4,
        rapid_channels=8,
        mild_channels=8,
        mild_mid_size=2,
        upsample_stages=3,
        image_size=32,
    )
    gen = Generator(spec, seed=0)
    out = gen(torch.randn(2, 16, generator=torch.Generator().manual_seed(4)))
    assert out.shape == (2, 1, 32, 32)


def test_seeded_construction_is_deterministic():
    z = torch.randn(2, 64, generator=torch.Generator().manual_seed(5))
    a = Generator(GeneratorSpec(), seed=9)(z)
    b = Generator(GeneratorSpec(), seed=9)(z)
    assert torch.equal(a, b)
    c = Generator(GeneratorSpec(), seed=10)(z)
    assert not torch.equal(a, c)


def test_rejects_wrong_embedding_shape():
    gen = Generator(GeneratorSpec(), seed=0)
    with pytest.raises(ValueError):
        gen(torch.zeros(2, 63))
    with pytest.raises(ValueError):
        gen(torch.zeros(64))


def test_output_depends_on_embedding():
    gen = Generator(GeneratorSpec(), seed=1)
    g = torch.Generator().manual_seed(6)
    a, b = torch.randn(1, 64, generator=g), torch.randn(1, 64, generator=g)
    assert not torch.equal(gen(a), gen(b))
