"""Tests for the building simulator: dynamics, costs, rewards, observations and metrics."""

import numpy as np
import pandas as pd
import pytest

from src.hvac_maac.building import (
    BuildingEnv,
    BuildingParams,
    EnvError,
    EnvState,
    EpisodeFinishedError,
    JointAction,
    ZoneParams,
    co2_mix,
    co2_step,
    coil_energy_cost,
    coil_power_mixed_air,
    coil_power_per_zone,
    default_building,
    episode_log_columns,
    fan_energy_cost,
    metrics,
    observation_scales,
    observe,
    reset,
    reward,
    rollout,
    step,
    thermal_mean,
    thermal_step,
)
from src.hvac_maac.config import Config, ConfigError
from src.hvac_maac.traces import TraceSet


def one_slot_traces(price, outdoor_temp, outdoor_co2, occupancy):
    return TraceSet(price=[price], outdoor_temp=[outdoor_temp], outdoor_co2=[outdoor_co2],
                    occupancy=[list(occupancy)])


def state_of(temps, co2, slot=0, end_slot=1):
    return EnvState(temps=temps, co2=co2, slot=slot, end_slot=end_slot)


def zero_action(building):
    return JointAction(airflow_idx=(0,) * building.n_zones, damper_idx=0)


class TestParams:
    """Parameter validation and construction."""

    def test_default_building_line_topology(self):
        building = default_building(4)
        assert building.zones[0].neighbors == [1]
        assert building.zones[1].neighbors == [0, 2]
        assert building.zones[3].neighbors == [2]
        for zone in building.zones:
            assert zone.ell + sum(zone.hbar.values()) + zone.varrho == pytest.approx(1.0)

    def test_action_sizes(self, building):
        assert building.n_agents == 5
        assert building.action_sizes == [11, 11, 11, 11, 11]

    def test_unstable_rc_rejected(self):
        with pytest.raises(ConfigError, match="unstable"):
            ZoneParams(ell=0.9, hbar={1: 0.1}, varpi=1e-4, varrho=0.1)

    def test_bad_comfort_band(self):
        with pytest.raises(ConfigError, match="t_min < t_max"):
            ZoneParams(ell=0.9, hbar={}, varpi=1e-4, varrho=0.1, t_min=24.0, t_max=19.0)

    def test_invalid_neighbor(self):
        zone = ZoneParams(ell=0.9, hbar={3: 0.02}, varpi=1e-4, varrho=0.08)
        with pytest.raises(ConfigError, match="invalid neighbors"):
            BuildingParams(zones=(zone,))

    def test_airflow_replacing_more_than_zone_air(self):
        with pytest.raises(ConfigError, match="max airflow"):
            default_building(1, zone_overrides={"volume": 100.0})

    def test_from_mapping(self):
        building = BuildingParams.from_mapping({
            "building.zones": "2",
            "rc.ell": "0.8",
            "reward.alpha": "10",
            "zone.airflow_levels": "0,100,200",
            "hvac.damper_levels": "0,0.5,1",
        })
        assert building.n_zones == 2
        assert building.alpha == 10.0
        assert building.zones[0].ell == 0.8
        assert building.action_sizes == [3, 3, 3]

    def test_from_mapping_bad_number(self):
        with pytest.raises(ConfigError, match="reward.beta"):
            BuildingParams.from_mapping({"reward.beta": "lots"})

    def test_with_rewards_and_disturbance(self, building):
        changed = building.with_rewards(1.0, 2.0).with_disturbance(1.5)
        assert (changed.alpha, changed.beta) == (1.0, 2.0)
        assert all(z.upsilon == 1.5 for z in changed.zones)
        assert building.alpha == Config.ALPHA


class TestThermal:
    """RC thermal update."""

    def setup_method(self):
        self.zones = (
            ZoneParams(ell=0.9, hbar={1: 0.05}, varpi=1e-4, varrho=0.05),
            ZoneParams(ell=0.9, hbar={0: 0.05}, varpi=1e-4, varrho=0.05),
        )
        self.building = BuildingParams(zones=self.zones)

    def test_hand_evaluated_update(self):
        temps = thermal_mean(self.building, np.array([24.0, 22.0]), np.array([450.0, 0.0]), 32.0)
        # 21.6 + 1.1 - 0.405 + 1.6
        assert temps[0] == pytest.approx(23.895, rel=1e-12)

    def test_identity_coefficients(self):
        zone = ZoneParams(ell=1.0, hbar={}, varpi=0.0, varrho=0.0)
        building = BuildingParams(zones=(zone,))
        assert thermal_mean(building, np.array([21.3]), np.array([450.0]), 35.0)[0] == 21.3

    def test_pure_outdoor_forcing(self):
        zone = ZoneParams(ell=0.0, hbar={}, varpi=0.0, varrho=1.0)
        building = BuildingParams(zones=(zone,))
        assert thermal_mean(building, np.array([21.0]), np.array([0.0]), 30.0)[0] == 30.0

    def test_affine_in_temperatures(self):
        traces = one_slot_traces(1.0, 30.0, 400.0, [0, 0])
        action = JointAction(airflow_idx=(4, 7), damper_idx=3)
        t1, t2, a = np.array([20.0, 26.0]), np.array([23.0, 18.0]), 0.3
        co2 = np.array([500.0, 500.0])
        mixed = thermal_step(self.building, state_of(a * t1 + (1 - a) * t2, co2), action, traces, None)
        first = thermal_step(self.building, state_of(t1, co2), action, traces, None)
        second = thermal_step(self.building, state_of(t2, co2), action, traces, None)
        np.testing.assert_allclose(mixed, a * first + (1 - a) * second, rtol=1e-12)

    def test_disturbance_needs_rng(self):
        building = self.building.with_disturbance(1.0)
        traces = one_slot_traces(1.0, 30.0, 400.0, [0, 0])
        with pytest.raises(EnvError, match="random generator"):
            thermal_step(building, state_of([22.0, 22.0], [500.0, 500.0]), zero_action(building), traces, None)

    def test_disturbance_is_bounded_and_seeded(self):
        building = self.building.with_disturbance(2.0)
        traces = one_slot_traces(1.0, 30.0, 400.0, [0, 0])
        state = state_of([22.0, 22.0], [500.0, 500.0])
        base = thermal_step(self.building, state, zero_action(building), traces, None)
        first = thermal_step(building, state, zero_action(building), traces, np.random.default_rng(9))
        second = thermal_step(building, state, zero_action(building), traces, np.random.default_rng(9))
        np.testing.assert_array_equal(first, second)
        assert np.all(np.abs(first - base) <= 2.0)


class TestCo2:
    """Mixed air and the zone CO2 balance."""

    def test_mix_all_outdoor(self):
        assert co2_mix(np.array([900.0, 1500.0]), np.array([100.0, 200.0]), 0.0, 400.0) == 400.0

    def test_mix_uniform_return_air(self):
        assert co2_mix(np.array([900.0, 900.0]), np.array([50.0, 300.0]), 1.0, 400.0) == pytest.approx(900.0)

    def test_mix_hand_evaluated(self):
        mixed = co2_mix(np.array([800.0, 1000.0]), np.array([100.0, 300.0]), 0.5, 400.0)
        assert mixed == pytest.approx(675.0, rel=1e-12)

    def test_mix_without_airflow_has_no_return_air(self):
        assert co2_mix(np.array([800.0, 1000.0]), np.zeros(2), 0.5, 400.0) == 200.0

    def test_zero_airflow_no_occupants_keeps_co2(self):
        building = default_building(2)
        traces = one_slot_traces(1.0, 30.0, 400.0, [0, 0])
        state = state_of([22.0, 22.0], [950.0, 700.0])
        np.testing.assert_array_equal(co2_step(building, state, zero_action(building), traces), [950.0, 700.0])

    def test_hand_evaluated_balance(self):
        # one zone: supply is 0.5 * 300 + 0.5 * 900 = 600 ppm
        building = default_building(1)
        traces = one_slot_traces(1.0, 30.0, 300.0, [10])
        state = state_of([22.0], [900.0])
        action = JointAction(airflow_idx=(10,), damper_idx=5)
        assert co2_step(building, state, action, traces)[0] == pytest.approx(787.5, rel=1e-12)

    def test_full_replacement_gives_mixed_air(self):
        building = default_building(1, zone_overrides={"volume": 337.5})  # 450 * 900 / (1200 * 337.5) = 1
        traces = one_slot_traces(1.0, 30.0, 420.0, [0])
        state = state_of([22.0], [1000.0])
        action = JointAction(airflow_idx=(10,), damper_idx=0)
        assert co2_step(building, state, action, traces)[0] == pytest.approx(420.0, rel=1e-12)

    def test_convex_without_occupants(self):
        rng = np.random.default_rng(0)
        building = default_building(3)
        for _ in range(100):
            co2 = rng.uniform(400.0, 2000.0, size=3)
            traces = one_slot_traces(1.0, 30.0, rng.uniform(350.0, 450.0), [0, 0, 0])
            action = JointAction(airflow_idx=rng.integers(0, 11, size=3), damper_idx=rng.integers(0, 11))
            mixed = co2_mix(co2, action.airflows(building), action.damper(building), traces.outdoor_co2[0])
            nxt = co2_step(building, state_of([22.0] * 3, co2), action, traces)
            assert np.all(nxt >= np.minimum(co2, mixed) - 1e-9)
            assert np.all(nxt <= np.maximum(co2, mixed) + 1e-9)


class TestCosts:
    """Fan and coil energy costs."""

    def test_fan_zero_airflow(self):
        assert fan_energy_cost(np.zeros(4), 1.0, 0.25) == 0.0

    def test_fan_hand_evaluated(self):
        assert fan_energy_cost(np.array([450.0]), 1.0, 0.25, mu=2e-6) == pytest.approx(0.0455625, rel=1e-12)

    def test_coil_hand_evaluated(self):
        building = default_building(1)
        traces = one_slot_traces(1.0, 30.0, 400.0, [0])
        action = JointAction(airflow_idx=(10,), damper_idx=10)
        power = coil_power_per_zone(building, state_of([24.0], [500.0]), action, traces)[0]
        assert power == pytest.approx(450.0 * 1.005 / (0.8879 * 5.9153) * 9.0, rel=1e-12)
        assert power == pytest.approx(774.95, abs=0.05)

    def test_coil_zero_lift(self):
        building = default_building(1)
        traces = one_slot_traces(1.0, 30.0, 400.0, [0])
        action = JointAction(airflow_idx=(10,), damper_idx=10)
        assert coil_power_per_zone(building, state_of([15.0], [500.0]), action, traces)[0] == 0.0

    def test_coil_clamps_heating(self):
        building = default_building(1)
        traces = one_slot_traces(1.0, 10.0, 400.0, [0])
        action = JointAction(airflow_idx=(10,), damper_idx=0)
        state = state_of([22.0], [500.0])
        assert coil_power_per_zone(building, state, action, traces)[0] == 0.0
        assert coil_power_per_zone(building, state, action, traces, clamp=False)[0] < 0.0

    def test_coil_energy_cost(self):
        assert coil_energy_cost(np.zeros(3), 1.0, 0.25) == 0.0
        assert coil_energy_cost(np.array([1000.0]), 1.2, 0.25) == pytest.approx(0.3, rel=1e-12)

    def test_zone_powers_sum_to_mixed_air_power(self):
        rng = np.random.default_rng(1)
        building = default_building(4)
        for _ in range(100):
            traces = one_slot_traces(1.0, rng.uniform(20.0, 38.0), 400.0, [0] * 4)
            state = state_of(rng.uniform(16.0, 30.0, size=4), [500.0] * 4)
            action = JointAction(airflow_idx=rng.integers(1, 11, size=4), damper_idx=rng.integers(0, 11))
            per_zone = coil_power_per_zone(building, state, action, traces, clamp=False)
            assert per_zone.sum() == pytest.approx(coil_power_mixed_air(building, state, action, traces), rel=1e-9)


class TestDynamicsOracle:
    """Random triples against single-expression evaluations of the model."""

    def test_matches_oracle(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n = int(rng.integers(1, 5))
            ell, hbar, varpi = rng.uniform(0.5, 0.9), rng.uniform(0.0, 0.05), rng.uniform(0.0, 2e-4)
            building = default_building(n, ell=ell, hbar=hbar, varpi=varpi)
            temps = rng.uniform(15.0, 35.0, size=n)
            co2 = rng.uniform(400.0, 2000.0, size=n)
            occupancy = rng.integers(0, 21, size=n)
            price, t_out, o_out = rng.uniform(0.2, 1.5), rng.uniform(20.0, 38.0), rng.uniform(350.0, 450.0)
            traces = one_slot_traces(price, t_out, o_out, occupancy)
            action = JointAction(airflow_idx=rng.integers(0, 11, size=n), damper_idx=rng.integers(0, 11))
            state = state_of(temps, co2)
            m = [45.0 * k for k in action.airflow_idx]
            sigma = action.damper_idx / 10
            tau, kappa, volume = 900.0, 1200.0, 500.0

            expected_t = [
                ell * temps[i] + sum(hbar * temps[z] for z in (i - 1, i + 1) if 0 <= z < n)
                + varpi * m[i] * (15.0 - temps[i])
                + (1.0 - ell - hbar * len([z for z in (i - 1, i + 1) if 0 <= z < n])) * t_out
                for i in range(n)
            ]
            mix = (1 - sigma) * o_out + (sigma * sum(co2[j] * m[j] for j in range(n)) / sum(m) if sum(m) else 0.0)
            expected_o = [
                (1 - m[i] * tau / (kappa * volume)) * co2[i] + m[i] * tau / (kappa * volume) * mix
                + occupancy[i] * tau * 0.005 * 1000.0 / volume
                for i in range(n)
            ]
            expected_fan = 2e-6 * sum(m) ** 3 / 1000.0 * price * 0.25
            expected_coil = sum(
                max(0.0, m[i] * 1.005 / (0.8879 * 5.9153) * (sigma * temps[i] + (1 - sigma) * t_out - 15.0))
                for i in range(n)) / 1000.0 * price * 0.25

            np.testing.assert_allclose(thermal_step(building, state, action, traces, None), expected_t, rtol=1e-12)
            np.testing.assert_allclose(co2_step(building, state, action, traces), expected_o, rtol=1e-12)
            assert fan_energy_cost(np.array(m), price, 0.25) == pytest.approx(expected_fan, rel=1e-12, abs=0)
            coil = coil_energy_cost(coil_power_per_zone(building, state, action, traces), price, 0.25)
            assert coil == pytest.approx(expected_coil, rel=1e-12, abs=1e-300)


class TestReward:
    """Four-part reward and its sharing rules."""

    def test_idle_building_scores_zero(self):
        building = default_building(3)
        traces = one_slot_traces(1.0, 22.0, 400.0, [0, 0, 0])
        prev = state_of([22.0] * 3, [600.0] * 3)
        nxt = state_of([22.0] * 3, [600.0] * 3, slot=1)
        rewards = reward(building, prev, zero_action(building), nxt, traces)
        np.testing.assert_array_equal(rewards.totals, np.zeros(4))
        assert rewards.energy_cost == 0.0

    def test_temperature_penalty_when_occupied(self):
        building = default_building(2)
        traces = one_slot_traces(1.0, 22.0, 400.0, [3, 0])
        prev = state_of([22.0, 22.0], [600.0, 600.0])
        nxt = state_of([25.0, 25.0], [600.0, 600.0], slot=1)
        rewards = reward(building, prev, zero_action(building), nxt, traces)
        np.testing.assert_array_equal(rewards.temperature, [-1.0, 0.0, 0.0])

    def test_fan_share_split_over_zones(self):
        building = default_building(2)
        traces = one_slot_traces(1.0, 22.0, 400.0, [0, 0])
        action = JointAction(airflow_idx=(10, 10), damper_idx=10)
        prev = state_of([22.0, 22.0], [600.0, 600.0])
        nxt = state_of([21.0, 21.0], [600.0, 600.0], slot=1)
        rewards = reward(building, prev, action, nxt, traces)
        half = rewards.fan_cost / 2
        np.testing.assert_allclose(rewards.fan, [-half, -half, 0.0], rtol=1e-15)

    def test_share_identities(self):
        rng = np.random.default_rng(11)
        building = default_building(4)
        for _ in range(1000):
            traces = TraceSet(price=[rng.uniform(0.2, 1.5)] * 2, outdoor_temp=[rng.uniform(20.0, 38.0)] * 2,
                              outdoor_co2=[400.0] * 2, occupancy=rng.integers(0, 3, size=(2, 4)))
            prev = state_of(rng.uniform(16.0, 30.0, size=4), rng.uniform(400.0, 1800.0, size=4), end_slot=2)
            action = JointAction(airflow_idx=rng.integers(0, 11, size=4), damper_idx=rng.integers(0, 11))
            nxt = state_of(rng.uniform(16.0, 30.0, size=4), rng.uniform(400.0, 1800.0, size=4), slot=1, end_slot=2)
            rewards = reward(building, prev, action, nxt, traces)
            violation = (traces.occupancy[1] > 0) * np.maximum(nxt.co2 - 1300.0, 0.0)

            assert rewards.fan.sum() == pytest.approx(-rewards.fan_cost, rel=1e-12, abs=1e-15)
            assert rewards.coil.sum() == pytest.approx(-rewards.coil_cost, rel=1e-12, abs=1e-15)
            assert rewards.co2.sum() == pytest.approx(-violation.sum(), rel=1e-12, abs=1e-15)
            for part in (rewards.fan, rewards.coil, rewards.temperature, rewards.co2):
                assert np.all(part <= 0.0)
            assert rewards.fan[-1] == 0.0
            assert rewards.temperature[-1] == 0.0

    def test_permuting_zones_permutes_rewards(self):
        building = default_building(2)
        traces = TraceSet(price=[0.8, 0.8], outdoor_temp=[31.0, 31.0], outdoor_co2=[400.0, 400.0],
                          occupancy=[[2, 5], [2, 5]])
        swapped = TraceSet(price=[0.8, 0.8], outdoor_temp=[31.0, 31.0], outdoor_co2=[400.0, 400.0],
                           occupancy=[[5, 2], [5, 2]])
        action = JointAction(airflow_idx=(3, 8), damper_idx=4)
        prev = state_of([23.0, 26.0], [900.0, 1400.0], end_slot=2)
        nxt = state_of([24.5, 18.0], [1350.0, 1200.0], slot=1, end_slot=2)
        first = reward(building, prev, action, nxt, traces).totals
        second = reward(building,
                        state_of([26.0, 23.0], [1400.0, 900.0], end_slot=2),
                        JointAction(airflow_idx=(8, 3), damper_idx=4),
                        state_of([18.0, 24.5], [1200.0, 1350.0], slot=1, end_slot=2),
                        swapped).totals
        np.testing.assert_allclose(second, [first[1], first[0], first[2]], rtol=1e-12)


class TestObservations:
    """Per-agent observation vectors."""

    def test_lengths(self, building, small_traces):
        state = reset(building, small_traces, 0)
        observations = observe(building, state, small_traces)
        assert [len(o) for o in observations] == [7, 8, 8, 7, 2 + 2 * 4]
        assert [len(s) for s in observation_scales(building)] == [len(o) for o in observations]

    def test_middle_zone_layout(self, building, small_traces):
        state = reset(building, small_traces, 1, initial_temps=[20.0, 21.0, 22.0, 23.0])
        values = small_traces.at(state.slot)
        obs = observe(building, state, small_traces)[1]
        np.testing.assert_array_equal(obs[:4], [values.outdoor_temp, 21.0, 20.0, 22.0])
        assert obs[4] == values.price
        assert obs[5] == 0  # first slot of the day
        assert obs[7] == Config.INITIAL_CO2

    def test_deterministic(self, building, small_traces):
        state = reset(building, small_traces, 0)
        first = observe(building, state, small_traces)
        second = observe(building, state, small_traces)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)


class TestResetAndStep:
    """Episode boundaries."""

    def test_reset_clamps_outdoor_temperature(self, flat_traces):
        building = default_building(2)
        state = reset(building, flat_traces(outdoor_temp=30.0), 0)
        np.testing.assert_array_equal(state.temps, [24.0, 24.0])
        assert state.slot == 0
        assert state.end_slot == 96

    def test_reset_co2_override(self, flat_traces):
        state = reset(default_building(2), flat_traces(), 0, initial_co2=800.0)
        np.testing.assert_array_equal(state.co2, [800.0, 800.0])

    def test_reset_jitter_is_seeded(self, flat_traces):
        building = default_building(2)
        first = reset(building, flat_traces(), 0, jitter=0.5, seed=4)
        second = reset(building, flat_traces(), 0, jitter=0.5, seed=4)
        np.testing.assert_array_equal(first.temps, second.temps)

    def test_reset_out_of_range(self, flat_traces):
        with pytest.raises(EnvError):
            reset(default_building(2), flat_traces(), 1)

    def test_reset_zone_mismatch(self, flat_traces):
        with pytest.raises(EnvError, match="zones"):
            reset(default_building(3), flat_traces(n_zones=2), 0)

    def test_slot_length_mismatch(self, flat_traces):
        building = default_building(2)
        hourly = flat_traces(slot_minutes=60)
        with pytest.raises(EnvError, match="60-minute slots"):
            reset(building, hourly, 0)
        with pytest.raises(EnvError, match="60-minute slots"):
            BuildingEnv(building, hourly)
        with pytest.raises(EnvError, match="60-minute slots"):
            rollout(building, hourly, lambda state, tr: zero_action(building))

    def test_episode_length_follows_building_slots(self, flat_traces):
        env = BuildingEnv(default_building(2), flat_traces())
        env.reset(0)
        steps, done = 0, False
        while not done:
            _, _, done, _ = env.step([0, 0, 0])
            steps += 1
        assert steps == 96
        assert env.observation_scales()[0][-3] == 96.0

    def test_idle_step(self, flat_traces):
        building = default_building(2)
        traces = flat_traces(outdoor_temp=30.0)
        state = reset(building, traces, 0, initial_temps=[22.0, 23.0])
        nxt, rewards, done = step(building, state, zero_action(building), traces, None)
        assert rewards.energy_cost == 0.0
        np.testing.assert_array_equal(rewards.totals, np.zeros(3))
        np.testing.assert_allclose(nxt.temps, thermal_mean(building, state.temps, np.zeros(2), 30.0))
        assert not done

    def test_done_after_a_day(self, flat_traces):
        building = default_building(2)
        traces = flat_traces()
        state = reset(building, traces, 0)
        for _ in range(traces.slots_per_day):
            state, _, done = step(building, state, zero_action(building), traces, None)
        assert done
        with pytest.raises(EpisodeFinishedError):
            step(building, state, zero_action(building), traces, None)

    def test_out_of_range_action(self, flat_traces):
        building = default_building(2)
        traces = flat_traces()
        state = reset(building, traces, 0)
        with pytest.raises(EnvError, match="out of range"):
            step(building, state, JointAction(airflow_idx=(11, 0), damper_idx=0), traces, None)

    def test_step_reproducible(self, flat_traces):
        building = default_building(2).with_disturbance(1.0)
        traces = flat_traces(occupancy=3)
        state = reset(building, traces, 0)
        action = JointAction(airflow_idx=(5, 6), damper_idx=2)
        first, r1, _ = step(building, state, action, traces, np.random.default_rng(1))
        second, r2, _ = step(building, state, action, traces, np.random.default_rng(1))
        np.testing.assert_array_equal(first.temps, second.temps)
        np.testing.assert_array_equal(r1.totals, r2.totals)


class TestMetricsAndRollout:
    """ATD, ACD, TEC and the episode log."""

    def make_log(self, temps, co2, occupancy, energy):
        return pd.DataFrame({"temp_1": temps, "co2_1": co2, "occupancy_1": occupancy, "energy_cost": energy})

    def test_single_occupied_slot(self):
        log = self.make_log([26.0, 40.0], [500.0, 500.0], [1, 0], [0.0, 0.0])
        result = metrics(log, default_building(1))
        assert result.atd == 2.0
        assert result.acd == 0.0

    def test_in_band_scores_zero(self):
        log = self.make_log([20.0, 23.0], [1000.0, 1200.0], [4, 4], [0.1, 0.2])
        result = metrics(log, default_building(1))
        assert (result.atd, result.acd) == (0.0, 0.0)
        assert result.tec == pytest.approx(0.3)

    def test_never_occupied_zone_contributes_zero(self):
        log = self.make_log([30.0, 30.0], [2000.0, 2000.0], [0, 0], [0.0, 0.0])
        assert metrics(log, default_building(1)).as_dict() == {"tec": 0.0, "atd": 0.0, "acd": 0.0}

    def test_empty_log(self):
        with pytest.raises(EnvError):
            metrics(pd.DataFrame(columns=episode_log_columns(1)), default_building(1))

    def test_rollout_idle_controller(self, flat_traces):
        building = default_building(2)
        traces = flat_traces(occupancy=2)
        log = rollout(building, traces, lambda state, tr: zero_action(building))
        assert list(log.columns) == episode_log_columns(2)
        assert len(log) == 96
        assert metrics(log, building).tec == 0.0

    def test_rollout_zero_horizon(self, flat_traces):
        building = default_building(2)
        log = rollout(building, flat_traces(), lambda state, tr: zero_action(building), horizon=0)
        assert len(log) == 0
        assert list(log.columns) == episode_log_columns(2)

    def test_rollout_horizon_overflow(self, flat_traces):
        building = default_building(2)
        with pytest.raises(EnvError, match="exceeds"):
            rollout(building, flat_traces(), lambda state, tr: zero_action(building), horizon=97)


class TestBuildingEnv:
    """Reset/step interface used by the learner."""

    def test_reset_and_step(self, building, small_traces):
        env = BuildingEnv(building, small_traces, seed=0)
        observations = env.reset(0)
        assert len(observations) == env.n_agents
        assert [len(o) for o in observations] == env.observation_sizes
        obs, rewards, done, info = env.step([0, 0, 0, 0, 5])
        assert rewards.shape == (5,)
        assert not done
        assert info["action"].damper_idx == 5

    def test_step_before_reset(self, building, small_traces):
        with pytest.raises(EnvError, match="reset"):
            BuildingEnv(building, small_traces).step([0] * 5)

    def test_zone_mismatch(self, small_traces):
        with pytest.raises(EnvError):
            BuildingEnv(default_building(2), small_traces)
