import random

import numpy as np
import pytest

from dwarith import kernels, mqx
from dwarith.lanes import DWordVec
from dwarith.modular import Modulus
from dwarith.mqx import MqxBackend, MqxIsa, VARIANTS
from dwarith.primes import NTT_PRIMES
from dwarith.words import adc_word, mul_wide_word, sbb_word

W = (1 << 64) - 1
rng = np.random.default_rng(11)


def rand_words(n=64):
    return rng.integers(0, 1 << 64, n, dtype=np.uint64, endpoint=False)


def isa(variant="mc", mode="functional", trace=None):
    return MqxIsa(trace, mode=mode, variant=variant)


def full(v, n=8):
    return np.full(n, v, dtype=np.uint64)


def test_mul_wide_functional():
    hi, lo = isa().mqx_mul_wide(full(1 << 32), full(1 << 32))
    assert hi.tolist() == [1] * 8 and lo.tolist() == [0] * 8
    a, b = rand_words(), rand_words()
    hi, lo = isa().mqx_mul_wide(a, b)
    for i in range(len(a)):
        assert (int(hi[i]), int(lo[i])) == mul_wide_word(int(a[i]), int(b[i]))


def test_adc_sbb_functional():
    s, co = isa().mqx_adc(full(W), full(0), np.ones(8, bool))
    assert s.tolist() == [0] * 8 and co.all()
    d, bo = isa().mqx_sbb(full(0), full(0), np.ones(8, bool))
    assert d.tolist() == [W] * 8 and bo.all()
    x = rand_words(8)
    d, bo = isa().mqx_sbb(x, x, np.zeros(8, bool))
    assert d.tolist() == [0] * 8 and not bo.any()
    a, b = rand_words(), rand_words()
    c = rng.integers(0, 2, len(a)).astype(bool)
    s, co = isa().mqx_adc(a, b, c)
    d, bo = isa().mqx_sbb(a, b, c)
    for i in range(len(a)):
        assert (int(s[i]), bool(co[i])) == adc_word(int(a[i]), int(b[i]), int(c[i]))
        assert (int(d[i]), bool(bo[i])) == sbb_word(int(a[i]), int(b[i]), int(c[i]))


def test_mulhi_and_predicated():
    i = isa("mcp")
    assert i.mqx_mulhi(full(1 << 32), full(1 << 32)).tolist() == [1] * 8
    assert i.mqx_mulhi(full(0), rand_words(8)).tolist() == [0] * 8
    a, b = rand_words(8), rand_words(8)
    zero, ones = np.zeros(8, bool), np.ones(8, bool)
    assert i.mqx_adc_pred(a, b, ones, zero).tolist() == a.tolist()
    assert i.mqx_adc_pred(a, b, zero, ones).tolist() == (a + b).tolist()
    pred = rng.integers(0, 2, 8).astype(bool)
    ci = rng.integers(0, 2, 8).astype(bool)
    got = i.mqx_adc_pred(a, b, ci, pred)
    for k in range(8):
        want = (int(a[k]) + int(b[k]) + int(ci[k])) & W if pred[k] else int(a[k])
        assert int(got[k]) == want
    got = i.mqx_sbb_pred(a, b, ci, pred)
    for k in range(8):
        want = (int(a[k]) - int(b[k]) - int(ci[k])) & W if pred[k] else int(a[k])
        assert int(got[k]) == want


def test_predicated_ops_need_mcp():
    with pytest.raises(RuntimeError):
        isa("mc").adc_pred(full(0), full(0), np.zeros(8, bool), np.zeros(8, bool))


def test_addmod128_wrap_and_replay():
    q = NTT_PRIMES[124]
    m = Modulus(q)
    out = mqx.mqx_addmod128(DWordVec.from_ints([q - 1] * 8), DWordVec.from_ints([1] * 8), m)
    assert out.to_ints() == [0] * 8
    r = random.Random(4)
    a = [r.randrange(q) for _ in range(64)]
    b = [r.randrange(q) for _ in range(64)]
    A, B = DWordVec.from_ints(a), DWordVec.from_ints(b)
    for v in VARIANTS:
        assert mqx.mqx_addmod128(A, B, m, variant=v).to_ints() == [(x + y) % q for x, y in zip(a, b)]
        assert mqx.mqx_submod128(A, B, m, variant=v).to_ints() == [(x - y) % q for x, y in zip(a, b)]
        assert mqx.mqx_mulmod128(A, B, m, variant=v).to_ints() == [x * y % q for x, y in zip(a, b)]


def _mulmod_trace(variant, mode="functional", op="v_mulmod"):
    be = MqxBackend(mode, variant, flags=set()).traced()
    m = Modulus(NTT_PRIMES[124])
    v = DWordVec.from_ints([3] * 8)
    getattr(be, op)(v, v, m)
    return be.trace


def test_variant_gating():
    names = _mulmod_trace("c").names()
    assert names["mqx.mul"] == 0 and names["mqx.adc"] > 0
    names = _mulmod_trace("m").names()
    assert names["mqx.adc"] == 0 and names["mqx.sbb"] == 0 and names["mqx.mul"] > 0
    names = _mulmod_trace("base").names()
    assert not any(n.startswith("mqx.") for n in names)


def test_mhc_pairs_mullo_with_mulhi():
    ops = [name for name, _ in _mulmod_trace("mhc").ops]
    assert "mqx.mul" not in ops
    his = [i for i, name in enumerate(ops) if name == "mqx.mulhi"]
    assert his
    for i in his:
        assert ops[i - 1] == "vpmullq"


def test_mcp_uses_predicated_add_in_submod():
    names = _mulmod_trace("mcp", op="v_submod").names()
    assert names["mqx.adcp"] == 1
    assert _mulmod_trace("mc", op="v_submod").names()["mqx.adcp"] == 0


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("op", ["v_addmod", "v_submod", "v_mulmod"])
def test_proxy_preserves_op_classes(variant, op):
    f = _mulmod_trace(variant, "functional", op)
    p = _mulmod_trace(variant, "pisa", op)
    assert p.classes() == f.classes()
    assert len(p) == len(f)


def test_proxy_uses_table_substitutes():
    names = _mulmod_trace("mc", "pisa").names()
    assert names["vpmullq[proxy:mqx.mul]"] > 0
    assert names["vpaddq{k}[proxy:mqx.adc]"] > 0
    assert names["vpsubq{k}[proxy:mqx.sbb]"] > 0
    assert not any(n.startswith("mqx.") for n in names)


def test_guard_adds_mask_ops_only():
    be = MqxBackend("pisa", "mc", guard=True, flags=set()).traced()
    m = Modulus(97)
    v = DWordVec.from_ints([3] * 8)
    be.v_addmod(v, v, m)
    plain = _mulmod_trace("mc", "pisa", "v_addmod")
    assert be.trace.lane_ops == plain.lane_ops
    assert len(be.trace) > len(plain)


def test_ntt_trace_classes_preserved_in_proxy_mode():
    m = Modulus(NTT_PRIMES[124])
    plan = kernels.plan_new(64, m)
    x = DWordVec.from_ints(range(64))
    traces = {}
    for mode in ("functional", "pisa"):
        be = MqxBackend(mode, "mc", flags=set()).traced()
        kernels.ntt_forward(x, plan, be)
        traces[mode] = be.trace
    assert traces["pisa"].classes() == traces["functional"].classes()
    assert traces["functional"].butterflies == plan.butterflies


def test_labels():
    assert MqxBackend(flags=set()).label == mqx.NON_REPRESENTATIVE
    assert MqxBackend("pisa", flags={"avx512f"}).label == "proxy-timed"
    assert MqxBackend("functional", flags={"avx512f"}).authoritative
    assert not MqxBackend("pisa", flags={"avx512f"}).authoritative


def test_addmod_sequence_lengths():
    assert mqx.avx512_addmod_trace().lane_ops == 15
    for v in ("c", "mc", "mhc", "mcp"):
        t = mqx.addmod128_listing_trace(v)
        assert t.lane_ops == 6
        assert t.names()["mqx.adc"] == 2 and t.names()["mqx.sbb"] == 2 and t.names()["vpblendmq"] == 2


def test_unknown_mode_or_variant():
    from dwarith.lanes import BackendUnavailable

    with pytest.raises(BackendUnavailable):
        MqxBackend("fast")
    with pytest.raises(BackendUnavailable):
        MqxBackend(variant="x")
    with pytest.raises(ValueError):
        MqxIsa(variant="zz")
