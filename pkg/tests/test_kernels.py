from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from evoc import _kernels as K
from evoc.charts import line_chart
from evoc.rng import N_SLOTS, RandomStreams, derive_seed


def test_draws_addressed_by_iteration():
    r = RandomStreams(5)
    a = r.iteration_draws(7, 10)
    r.iteration_draws(3, 10)
    assert np.array_equal(a, RandomStreams(5).iteration_draws(7, 10))
    assert a.shape == (10, N_SLOTS)
    assert ((a >= 0) & (a < 1)).all()
    full = RandomStreams(5).run_draws(7, 10)
    assert np.array_equal(full[6], a)
    assert not np.array_equal(full[5], a)


def test_draws_depend_on_seed():
    assert not np.array_equal(RandomStreams(1).iteration_draws(1, 4), RandomStreams(2).iteration_draws(1, 4))


def test_derive_seed():
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert len({derive_seed(0, c, r) for c in range(4) for r in range(100)}) == 400
    assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)
    assert 0 <= derive_seed(2**64 - 1, 3) < 2**64


@given(st.lists(st.sampled_from([0.1, 0.5, 0.5, 0.9]), min_size=1, max_size=8))
def test_scan_order_is_stable_argsort(keys):
    arr = np.array(keys + [0.0] * (8 - len(keys)))
    got = K.scan_order(arr, len(keys))
    assert list(got[: len(keys)]) == list(np.argsort(np.array(keys), kind="stable"))


def test_trend_bias():
    assert K.trend_bias(10.0, 1, 0.0, 0) == 0.0
    assert K.trend_bias(20.0, 2, 10.0, 2) == (10 - 5) / (10 + 5 + 1)
    assert K.trend_bias(5.0, 1, 5.0, 1) == 0.0
    assert -1 < K.trend_bias(0.0, 1, 1e9, 1) < 0


def test_initial_rcc_kernel():
    assert K.initial_rcc(0, 0.8, 1 / 36, 1.0) == 1.0
    assert K.initial_rcc(6, 0.8, 1 / 36, 1.0) == 0.8**6
    assert K.initial_rcc(500, 0.8, 1 / 36, 1.0) == 1 / 36


@given(st.lists(st.lists(st.integers(0, 5), min_size=1, max_size=4), min_size=1, max_size=12))
def test_diversity_backends_agree(rows):
    width = 4
    actions = np.full((len(rows), width), -1, dtype=np.int16)
    lengths = np.array([len(r) for r in rows], dtype=np.int64)
    for i, r in enumerate(rows):
        actions[i, : len(r)] = r
    expected = len({tuple(r) for r in rows})
    assert K.diversity_loop(actions, lengths) == expected
    assert K.diversity_vec(actions) == expected


def test_numba_switch_off_gives_same_output():
    cmd = [sys.executable, "-m", "evoc.cli", "run", "--seed", "9", "--chaining", "--cf", "--iterations", "30",
           "--switch-at", "15"]
    with_numba = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    env = dict(os.environ, EVOC_NUMBA="0")
    without = subprocess.run(cmd, capture_output=True, text=True, check=True, env=env).stdout
    assert with_numba == without
    probe = subprocess.run([sys.executable, "-c", "from evoc import _kernels as K; print(K.HAVE_NUMBA)"],
                           capture_output=True, text=True, env=env, check=True)
    assert probe.stdout.strip() == "False"


def test_chart_is_deterministic_and_well_formed():
    series = {"a": [1.0, 2.0, 3.0], "b & c": [0.5, 0.5, 4.0]}
    svg = line_chart(series, [1, 2, 3], "title <x>", "y", marker_x=2)
    assert svg == line_chart(series, [1, 2, 3], "title <x>", "y", marker_x=2)
    assert svg.count("<polyline") == 2
    assert "&lt;x&gt;" in svg and "b &amp; c" in svg
    assert "stroke-dasharray=\"3,3\"" in svg
    import xml.dom.minidom

    xml.dom.minidom.parseString(svg)
