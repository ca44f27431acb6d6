from dataclasses import replace
import math

import pytest

from dss.errors import ConfigError
from dss.radio.traffic import PacketQueue, Rat, UserConfig, queue_weight, subframe_reward, user_weight


@pytest.fixture
def user() -> UserConfig:
    return UserConfig(0, Rat.NR, arrival_period=4, packet_size=45000)


def test_weight_of_empty_buffer_is_zero(user):
    assert user_weight(7, user, buffer_empty=True) == 0.0


def test_weight_below_step_delay(user):
    assert user_weight(2, user, buffer_empty=False) == pytest.approx(2e-5)


def test_weight_from_step_delay_on(user):
    assert user_weight(3, user, buffer_empty=False) == pytest.approx(5.00003)


@pytest.mark.parametrize(
    "weights, expected",
    [([], 1.0), ([0.0, 0.0], 1.0), ([5.0], math.exp(-5)), ([0.5, 0.5], math.exp(-1))],
)
def test_subframe_reward(weights, expected):
    assert subframe_reward(weights) == pytest.approx(expected)


def test_periodic_arrivals(user):
    assert user.arrives_at(4)
    assert user.bits_arriving_at(4) == 45000
    assert not user.arrives_at(5)
    assert not UserConfig(1, Rat.LTE, arrival_period=2, packet_size=1).arrives_at(1)


def test_one_shot_arrivals():
    one_shot = UserConfig(0, Rat.NR, arrival_period=1, packet_size=90000, first_arrival=1, arrival_count=1)
    assert [one_shot.arrives_at(p) for p in range(4)] == [False, True, False, False]


def test_queue_drains_oldest_packets_first():
    queue = PacketQueue([(0, 100), (1, 50)])
    assert queue.drain(120) == 120
    assert queue.packets == [(1, 30)]
    assert queue.oldest_arrival() == 1
    assert queue.drain(1000) == 30
    assert queue.is_empty()


def test_zero_bit_packets_are_dropped():
    queue = PacketQueue()
    queue.push(3, 0)
    assert queue.is_empty()
    assert queue.waiting_time(10) == 0


def test_queue_weight_uses_oldest_packet(user):
    queue = PacketQueue([(1, 10), (4, 10)])
    assert queue_weight(queue, user, 5) == pytest.approx(5.00004)


def test_queue_copy_is_independent():
    queue = PacketQueue([(0, 100)])
    clone = queue.copy()
    clone.drain(40)
    assert queue.total_bits == 100
    assert clone.total_bits == 60


@pytest.mark.parametrize(
    "field, value",
    [("arrival_period", 0), ("packet_size", -1), ("step_delay", 0), ("weight_slope", 0.0)],
)
def test_invalid_users_are_rejected(user, field, value):
    with pytest.raises(ConfigError):
        replace(user, **{field: value}).validate()
