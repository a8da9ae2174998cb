import numpy as np
import pytest

from rggent.streams import RandomStream, as_generator, as_stream, ordered_sum, parallel_map, seed_from_env


def _draw(stream):
    return stream.generator().random(4).tolist()


def test_streams_are_keyed():
    a = RandomStream(7).spawn(1, 2)
    assert a.key == (1, 2)
    assert _draw(a) == _draw(RandomStream(7, (1, 2)))
    assert _draw(a) != _draw(RandomStream(7, (2, 1)))
    assert _draw(RandomStream(7)) != _draw(RandomStream(8))


def test_parallel_map_is_ordered_and_worker_free():
    streams = [RandomStream(3).spawn(i) for i in range(6)]
    assert parallel_map(_draw, streams, 1) == parallel_map(_draw, streams, 3)


def test_coercions():
    assert as_stream(5) == RandomStream(5)
    assert as_stream(None) == RandomStream(0)
    g = np.random.default_rng(1)
    assert as_generator(g) is g
    with pytest.raises(TypeError):
        as_stream("seed")
    with pytest.raises(ValueError):
        RandomStream(-1)
    with pytest.raises(ValueError):
        RandomStream(0).spawn(-1)


def test_seed_env(monkeypatch):
    monkeypatch.setenv("RGGENT_SEED", "99")
    assert seed_from_env(None) == 99
    assert seed_from_env(3) == 3
    monkeypatch.delenv("RGGENT_SEED")
    assert seed_from_env(None) == 0


def test_ordered_sum():
    assert ordered_sum([0.1, 0.2, 0.3]) == (0.1 + 0.2) + 0.3
