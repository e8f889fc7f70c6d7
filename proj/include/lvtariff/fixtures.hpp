#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lvtariff/domain.hpp"
#include "lvtariff/powerflow.hpp"

namespace lvtariff {

// Retail battery pairing for a rooftop array: 6 kWh up to 4 kWp, then 8, 10
// and 12 kWh in 2 kWp steps; inverter power is half the capacity.
BatteryParams battery_for_pv(double pv_kwp);

// Deterministic demo household: seasonal base load with morning and evening
// peaks, a half-sine PV day with cloud noise, and interval hot-water draws.
CustomerTraces demo_traces(std::uint64_t seed, int first_day, int num_days, double pv_kwp);

// Gear stripped to the scenario: I drops PV and battery, II drops battery.
CustomerRecord customer_for_scenario(const CustomerRecord& full, Scenario sc);
CustomerTraces traces_for_scenario(const CustomerTraces& full, Scenario sc);

// Reference behavior without coordination: thermostat water heating on top
// of the base load, PV self-consumed, no battery. Used to measure clipping.
SlotGrid unmanaged_import_kw(const CustomerRecord& customer, const CustomerTraces& traces);

struct Fixture {
    std::vector<CustomerRecord> customers;  // full Scenario III gear
    std::map<std::string, CustomerTraces> traces;
    Network network;
};

// n customers on a three-phase radial trunk, three per node, phases assigned
// round-robin; customer k is "c<k>". PV sizes draw uniformly from 3-10 kWp.
Fixture make_fixture(int n_customers, std::uint64_t seed, int first_day, int num_days,
                     const TariffSchedule& tariff);

}  // namespace lvtariff
