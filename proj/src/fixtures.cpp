#include "lvtariff/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lvtariff/hems.hpp"
#include "lvtariff/rng.hpp"

namespace lvtariff {

namespace {

// winter-peaking demand (southern hemisphere), summer-peaking sun
double season_demand(int day) {
    return 1.0 + 0.25 * std::cos(2.0 * std::numbers::pi * (day - 196) / 365.0);
}

double season_sun(int day) {
    return 1.0 + 0.35 * std::cos(2.0 * std::numbers::pi * (day - 15) / 365.0);
}

double base_shape_kw(int slot) {
    if (slot >= 15 && slot <= 17) return 1.1;  // 07:00-08:30 breakfast
    if (slot >= 18 && slot <= 35) return 0.55;
    if (slot >= 36 && slot <= 41) return 2.0;  // 17:30-20:30 evening
    if (slot >= 42 && slot <= 44) return 0.85;
    return 0.4;  // overnight
}

struct DrawPattern {
    int start_slot;
    int end_slot;
    double mu;
    double scale_l;
};

constexpr DrawPattern kDrawPatterns[] = {
    {1, 4, 0.2, 8.0},    // small pre-dawn use
    {13, 17, 1.4, 14.0},  // morning showers
    {18, 30, 0.5, 8.0},
    {31, 36, 0.4, 9.0},
    {37, 43, 1.2, 14.0},  // evening baths and dishes
    {44, 48, 0.3, 8.0},
};

}  // namespace

BatteryParams battery_for_pv(double pv_kwp) {
    if (pv_kwp <= 0.0) throw std::invalid_argument("battery_for_pv: PV size must be positive");
    BatteryParams b;
    b.capacity_kwh = pv_kwp <= 4.0 ? 6.0 : pv_kwp <= 6.0 ? 8.0 : pv_kwp <= 8.0 ? 10.0 : 12.0;
    b.p_charge_max_kw = b.capacity_kwh / 2.0;
    b.p_discharge_max_kw = b.capacity_kwh / 2.0;
    b.soc_min_kwh = 0.1 * b.capacity_kwh;
    b.eta_charge = 0.94868;  // square root of a 90% round trip
    b.eta_discharge = 0.94868;
    b.soc_initial_kwh = 0.5 * b.capacity_kwh;
    return b;
}

CustomerTraces demo_traces(std::uint64_t seed, int first_day, int num_days, double pv_kwp) {
    if (num_days <= 0) throw std::invalid_argument("demo_traces: num_days must be positive");
    Rng rng(mix_seed(seed, 0x66697874));

    CustomerTraces tr;
    tr.base_demand_kw = SlotGrid::zeros(first_day, num_days);
    tr.pv_kw = SlotGrid::zeros(first_day, num_days);
    tr.hw_draw_l = SlotGrid::zeros(first_day, num_days);

    const double household = rng.uniform(0.8, 1.25);  // family size factor
    for (int d = first_day; d < first_day + num_days; ++d) {
        const double season = season_demand(d);
        for (int s = 1; s <= kSlotsPerDay; ++s) {
            double kw = base_shape_kw(s) * household * season * rng.uniform(0.85, 1.15);
            if (rng.uniform() < 0.04) kw += rng.uniform(0.8, 2.0);  // appliance burst
            tr.base_demand_kw.at(d, s) = kw;
        }

        if (pv_kwp > 0.0) {
            const double sun = season_sun(d);
            const bool cloudy = rng.uniform() < 0.2;
            const double sky = cloudy ? rng.uniform(0.2, 0.5) : rng.uniform(0.75, 1.0);
            for (int s = 13; s <= 36; ++s) {  // 06:00-18:00
                const double hour = (s - 1) * 0.5 - 6.0;
                const double arc = std::sin(std::numbers::pi * hour / 12.0);
                tr.pv_kw.at(d, s) = std::max(0.0, 0.85 * pv_kwp * arc * sun * sky * rng.uniform(0.92, 1.0));
            }
        }

        for (const DrawPattern& pat : kDrawPatterns) {
            const int n_draws = rng.poisson(pat.mu);
            for (int k = 0; k < n_draws; ++k) {
                const int slot = pat.start_slot +
                                 static_cast<int>(rng.uniform_u64(pat.end_slot - pat.start_slot + 1));
                tr.hw_draw_l.at(d, slot) += rng.weibull(pat.scale_l, 2.0);
            }
        }
    }
    return tr;
}

CustomerRecord customer_for_scenario(const CustomerRecord& full, Scenario sc) {
    CustomerRecord c = full;
    c.scenario = sc;
    if (sc != Scenario::III) c.battery.reset();
    if (sc == Scenario::I) c.pv_size_kwp.reset();
    return c;
}

CustomerTraces traces_for_scenario(const CustomerTraces& full, Scenario sc) {
    CustomerTraces tr = full;
    if (sc == Scenario::I) {
        tr.pv_kw = SlotGrid::zeros(tr.pv_kw.first_day, tr.pv_kw.num_days);
    }
    return tr;
}

SlotGrid unmanaged_import_kw(const CustomerRecord& customer, const CustomerTraces& traces) {
    const EwhParams& w = customer.ewh;
    const double on_below_c = w.t_min_c + 2.0;
    const double off_above_c = std::min(w.t_min_c + 10.0, w.t_max_c);

    SlotGrid imp = SlotGrid::zeros(traces.base_demand_kw.first_day, traces.base_demand_kw.num_days);
    double temp = w.t_initial_c;
    bool heating = false;
    for (int d = imp.first_day; d <= imp.last_day(); ++d) {
        for (int s = 1; s <= kSlotsPerDay; ++s) {
            if (temp <= on_below_c) heating = true;
            if (temp >= off_above_c) heating = false;
            const double ewh_kw = heating ? w.element_kw : 0.0;
            temp = step_ewh_temp(temp, ewh_kw, traces.hw_draw_l.at(d, s), w);
            const double pv = customer.pv_size_kwp ? traces.pv_kw.at(d, s) : 0.0;
            imp.at(d, s) = std::max(0.0, traces.base_demand_kw.at(d, s) + ewh_kw -
                                             customer.inverter_eta * pv);
        }
    }
    return imp;
}

Fixture make_fixture(int n_customers, std::uint64_t seed, int first_day, int num_days,
                     const TariffSchedule& tariff) {
    if (n_customers <= 0) throw std::invalid_argument("make_fixture: need at least one customer");
    Fixture fx;

    Rng rng(mix_seed(seed, 0x6e657477));
    for (int k = 1; k <= n_customers; ++k) {
        CustomerRecord c;
        c.id = "c" + std::to_string(k);
        c.scenario = Scenario::III;
        c.tariff = tariff;
        c.pv_size_kwp = static_cast<double>(3 + rng.uniform_u64(8));  // 3..10 kWp
        c.battery = battery_for_pv(c.pv_size_kwp.value());
        c.ewh.t_initial_c = 70.0;  // headroom against a first-slot draw
        fx.customers.push_back(c);
        fx.traces.emplace(c.id, demo_traces(mix_seed(seed, k), first_day, num_days,
                                            c.pv_size_kwp.value()));
    }

    const int trunk = (n_customers + 2) / 3;
    Network& net = fx.network;
    net.num_nodes = trunk + 1;
    for (int n = 1; n <= trunk; ++n) {
        Network::Edge e;
        e.from = n - 1;
        e.to = n;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                e.z_ohm[i][j] = i == j ? Complex(0.04, 0.025) : Complex(0.012, 0.008);
            }
        }
        net.edges.push_back(e);
    }
    for (int k = 1; k <= n_customers; ++k) {
        net.taps.push_back({"c" + std::to_string(k), (k - 1) / 3 + 1, (k - 1) % 3});
    }
    net.head_rating_a = 120.0;
    net.nominal_voltage_v = 230.0;
    net.v0_pu = 1.0;
    net.s_base_kva = 100.0;
    net.validate();
    return fx;
}

}  // namespace lvtariff
