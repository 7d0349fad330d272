import numpy as np
import pytest

import convsim


def test_gen_tensor_deterministic():
    a = convsim.gen_tensor([2, 3], 42)
    b = convsim.gen_tensor([2, 3], 42)
    assert a.shape == (2, 3)
    np.testing.assert_array_equal(a, b)
    assert ((a >= 0) & (a < 1)).all()


def test_oracle_matches_numpy():
    rng = np.random.default_rng(0)
    img = rng.random((2, 8, 8), dtype=np.float32)
    flt = rng.random((3, 2, 3, 3), dtype=np.float32)
    out = convsim.naive_convolve(img, flt)
    assert out.shape == (3, 6, 6)
    expect = np.zeros_like(out)
    for f in range(3):
        for y in range(6):
            for x in range(6):
                expect[f, y, x] = np.sum(
                    img[:, y : y + 3, x : x + 3] * flt[f]
                )
    np.testing.assert_allclose(out, expect, rtol=1e-5)


def test_run_special_equals_oracle():
    img = convsim.gen_tensor([1, 16, 16], 1)
    flt = convsim.gen_tensor([2, 1, 3, 3], 2)
    cfg = convsim.SpecialConfig()
    cfg.block_w = 8
    cfg.block_h = 4
    cfg.vec = 2
    out, metrics = convsim.run_special(img, flt, cfg, convsim.MemModel())
    np.testing.assert_allclose(
        out, convsim.naive_convolve(img, flt), rtol=1e-5
    )
    assert metrics["sm_conflict_excess"] == 0
    assert metrics["cm_requests"] == metrics["cm_broadcast_hits"]


def test_unmatched_doubles_sm_cycles():
    img = convsim.gen_tensor([1, 16, 16], 1)
    flt = convsim.gen_tensor([2, 1, 3, 3], 2)
    cfg = convsim.SpecialConfig()
    cfg.block_w = 8
    cfg.block_h = 4
    cfg.vec = 2
    model = convsim.MemModel()
    _, matched = convsim.run_special(img, flt, cfg, model)
    _, unmatched = convsim.run_special_unmatched(img, flt, cfg, model)
    assert unmatched["sm_cycles"] == 2 * matched["sm_cycles"]


def test_run_general_equals_oracle():
    img = convsim.gen_tensor([4, 34, 34], 3)
    flt = convsim.gen_tensor([64, 4, 3, 3], 4)
    cfg = convsim.GeneralConfig()  # 32x4 block, F_TB=64, W_T=16, F_T=4
    out, metrics = convsim.run_general(img, flt, cfg, convsim.MemModel())
    np.testing.assert_allclose(
        out, convsim.naive_convolve(img, flt), rtol=1e-5
    )
    assert metrics["sm_conflict_excess"] == 0


def test_validation_errors():
    cfg = convsim.GeneralConfig()
    cfg.pixels_per_thread = 7
    violations = convsim.validate_general_config(
        cfg, 3, 16, 64, convsim.MemModel()
    )
    assert violations
    img = convsim.gen_tensor([2, 18, 18], 1)
    flt = convsim.gen_tensor([8, 2, 3, 3], 2)
    with pytest.raises(ValueError):
        convsim.run_general(img, flt, cfg, convsim.MemModel())


def test_enumerate_configs_contains_reference_tiling():
    ranked = convsim.enumerate_configs(3, 64, 64, convsim.MemModel())
    assert any(
        c["W"] == 32
        and c["H"] == 4
        and c["F_TB"] == 64
        and c["W_T"] == 16
        and c["F_T"] == 4
        and c["C_SH"] == 2
        for c in ranked
    )
