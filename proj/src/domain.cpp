#include "lvtariff/domain.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace lvtariff {

namespace {

constexpr std::array<int, 12> kMonthLengths = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

constexpr std::array<int, 12> month_starts() {
    std::array<int, 12> s{};
    int d = 1;
    for (int m = 0; m < 12; ++m) {
        s[m] = d;
        d += kMonthLengths[m];
    }
    return s;
}

constexpr std::array<int, 12> kMonthStarts = month_starts();

}  // namespace

int days_in_month(int month) {
    if (month < 1 || month > 12) throw std::invalid_argument("month out of range: " + std::to_string(month));
    return kMonthLengths[month - 1];
}

int first_day_of_month(int month) {
    if (month < 1 || month > 12) throw std::invalid_argument("month out of range: " + std::to_string(month));
    return kMonthStarts[month - 1];
}

int month_of_day(int day) {
    if (day < 1 || day > kDaysPerYear) throw std::invalid_argument("day out of range: " + std::to_string(day));
    int m = 1;
    while (m < 12 && day >= kMonthStarts[m]) ++m;
    return m;
}

TimeSlot::TimeSlot(int day_, int slot_) : day(day_), slot(slot_) {
    if (day < 1 || day > kDaysPerYear) throw std::invalid_argument("day out of range: " + std::to_string(day));
    if (slot < 1 || slot > kSlotsPerDay) throw std::invalid_argument("slot out of range: " + std::to_string(slot));
}

TouPeriod tou_period(int slot) {
    if (slot < 1 || slot > kSlotsPerDay) throw std::invalid_argument("slot out of range: " + std::to_string(slot));
    int start = (slot - 1) * 30;
    if ((start >= 7 * 60 && start < 9 * 60) || (start >= 17 * 60 && start < 20 * 60)) return TouPeriod::Peak;
    if ((start >= 9 * 60 && start < 17 * 60) || (start >= 20 * 60 && start < 22 * 60)) return TouPeriod::Shoulder;
    return TouPeriod::OffPeak;
}

void TariffSchedule::validate() const {
    bool tou = is_tou();
    if (tou && !tou_rates) throw std::invalid_argument("ToU tariff missing tou_rates");
    if (tou && flat_rate) throw std::invalid_argument("ToU tariff must not carry flat_rate");
    if (!tou && !flat_rate) throw std::invalid_argument("flat tariff missing flat_rate");
    if (!tou && tou_rates) throw std::invalid_argument("flat tariff must not carry tou_rates");
    if (has_demand_charge()) {
        if (!demand_charge || *demand_charge <= 0.0)
            throw std::invalid_argument("demand tariff requires demand_charge > 0");
    } else if (demand_charge) {
        throw std::invalid_argument("energy tariff must not carry demand_charge");
    }
    if (fixed_daily < 0.0 || fit < 0.0) throw std::invalid_argument("tariff rates must be nonnegative");
    if (flat_rate && *flat_rate < 0.0) throw std::invalid_argument("flat_rate must be nonnegative");
    if (tou_rates && (tou_rates->off_peak < 0.0 || tou_rates->shoulder < 0.0 || tou_rates->peak < 0.0))
        throw std::invalid_argument("tou_rates must be nonnegative");
}

double price_at(const TariffSchedule& tariff, const TimeSlot& ts) {
    if (tariff.is_tou()) {
        const TouRates& r = *tariff.tou_rates;
        switch (tou_period(ts.slot)) {
            case TouPeriod::OffPeak: return r.off_peak;
            case TouPeriod::Shoulder: return r.shoulder;
            case TouPeriod::Peak: return r.peak;
        }
    }
    return *tariff.flat_rate;
}

TariffSchedule tariff_preset(std::string_view name) {
    // Origin Energy retail rates for the Essential Energy zone; demand-based
    // presets pass the network demand charge (4.2112 $/kW/month) through.
    TariffSchedule t;
    t.fixed_daily = 1.5511;
    t.fit = 0.09;
    if (name == "Flat") {
        t.kind = TariffKind::Flat;
        t.flat_rate = 0.313170;
    } else if (name == "ToU") {
        t.kind = TariffKind::ToU;
        t.tou_rates = TouRates{0.213400, 0.371470, 0.385880};
    } else if (name == "FlatD") {
        t.kind = TariffKind::FlatD;
        t.flat_rate = 0.235018;
        t.demand_charge = 4.2112;
    } else if (name == "ToUD") {
        t.kind = TariffKind::ToUD;
        t.tou_rates = TouRates{0.188532, 0.279319, 0.286750};
        t.demand_charge = 4.2112;
    } else {
        throw std::invalid_argument("unknown tariff preset '" + std::string(name) + "'");
    }
    t.validate();
    return t;
}

const char* to_string(TariffKind k) {
    switch (k) {
        case TariffKind::Flat: return "Flat";
        case TariffKind::ToU: return "ToU";
        case TariffKind::FlatD: return "FlatD";
        case TariffKind::ToUD: return "ToUD";
    }
    return "?";
}

TariffKind tariff_kind_from_string(std::string_view s) {
    if (s == "Flat") return TariffKind::Flat;
    if (s == "ToU") return TariffKind::ToU;
    if (s == "FlatD") return TariffKind::FlatD;
    if (s == "ToUD") return TariffKind::ToUD;
    throw std::invalid_argument("unknown tariff kind '" + std::string(s) + "'");
}

TariffSchedule tariff_from_json(const nlohmann::json& j) {
    TariffSchedule t;
    t.kind = tariff_kind_from_string(j.at("kind").get<std::string>());
    t.fixed_daily = j.at("fixed_daily").get<double>();
    t.fit = j.at("fit").get<double>();
    if (j.contains("flat_rate") && !j["flat_rate"].is_null()) t.flat_rate = j["flat_rate"].get<double>();
    if (j.contains("tou_rates") && !j["tou_rates"].is_null()) {
        const auto& r = j["tou_rates"];
        t.tou_rates = TouRates{r.at("off_peak").get<double>(), r.at("shoulder").get<double>(), r.at("peak").get<double>()};
    }
    if (j.contains("demand_charge") && !j["demand_charge"].is_null()) t.demand_charge = j["demand_charge"].get<double>();
    if (j.contains("peak_variant")) {
        std::string v = j["peak_variant"].get<std::string>();
        if (v == "monthly_max") t.peak_variant = PeakVariant::MonthlyMax;
        else if (v == "top_four_daily_avg") t.peak_variant = PeakVariant::TopFourDailyAvg;
        else throw std::invalid_argument("unknown peak_variant '" + v + "'");
    }
    t.validate();
    return t;
}

nlohmann::json tariff_to_json(const TariffSchedule& t) {
    nlohmann::json j;
    j["kind"] = to_string(t.kind);
    j["fixed_daily"] = t.fixed_daily;
    j["fit"] = t.fit;
    if (t.flat_rate) j["flat_rate"] = *t.flat_rate;
    if (t.tou_rates)
        j["tou_rates"] = {{"off_peak", t.tou_rates->off_peak}, {"shoulder", t.tou_rates->shoulder}, {"peak", t.tou_rates->peak}};
    if (t.demand_charge) j["demand_charge"] = *t.demand_charge;
    j["peak_variant"] = t.peak_variant == PeakVariant::MonthlyMax ? "monthly_max" : "top_four_daily_avg";
    return j;
}

void BatteryParams::validate() const {
    if (!(soc_min_kwh >= 0.0 && soc_min_kwh <= soc_initial_kwh && soc_initial_kwh <= capacity_kwh))
        throw std::invalid_argument("battery SOC bounds violated: need 0 <= min <= initial <= capacity");
    if (!(eta_charge > 0.0 && eta_charge <= 1.0 && eta_discharge > 0.0 && eta_discharge <= 1.0))
        throw std::invalid_argument("battery efficiencies must be in (0, 1]");
    if (p_charge_max_kw <= 0.0 || p_discharge_max_kw <= 0.0)
        throw std::invalid_argument("battery power limits must be positive");
}

void EwhParams::validate() const {
    if (!(t_min_c <= t_initial_c && t_initial_c <= t_max_c))
        throw std::invalid_argument("EWH initial temperature outside [t_min, t_max]");
    if (volume_l <= 0.0 || element_kw <= 0.0 || surface_m2 <= 0.0 || conductance_w_m2c <= 0.0 ||
        density_kg_m3 <= 0.0 || specific_heat_kj_kgc <= 0.0)
        throw std::invalid_argument("EWH physical parameters must be positive");
    if (!(eta_thermal > 0.0 && eta_thermal <= 1.0)) throw std::invalid_argument("EWH eta_thermal must be in (0, 1]");
    if (heat_capacity_kj_c() <= 0.0) throw std::invalid_argument("EWH heat capacity must be positive");
}

const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::I: return "I";
        case Scenario::II: return "II";
        case Scenario::III: return "III";
    }
    return "?";
}

Scenario scenario_from_string(std::string_view s) {
    if (s == "I") return Scenario::I;
    if (s == "II") return Scenario::II;
    if (s == "III") return Scenario::III;
    throw std::invalid_argument("unknown scenario '" + std::string(s) + "'");
}

void CustomerRecord::validate() const {
    tariff.validate();
    ewh.validate();
    if (battery) battery->validate();
    if ((scenario == Scenario::II || scenario == Scenario::III) && !pv_size_kwp)
        throw std::invalid_argument("customer " + id + ": scenario " + to_string(scenario) + " requires pv_size");
    if (scenario == Scenario::III && !battery)
        throw std::invalid_argument("customer " + id + ": scenario III requires a battery");
    if (!(inverter_eta > 0.0 && inverter_eta <= 1.0))
        throw std::invalid_argument("customer " + id + ": inverter_eta must be in (0, 1]");
    if (grid_limit_kw <= 0.0) throw std::invalid_argument("customer " + id + ": grid_limit must be positive");
}

SlotGrid SlotGrid::zeros(int first_day, int num_days) {
    if (num_days < 0 || first_day < 1) throw std::invalid_argument("SlotGrid: bad day range");
    SlotGrid g;
    g.first_day = first_day;
    g.num_days = num_days;
    g.values.assign(static_cast<std::size_t>(num_days) * kSlotsPerDay, 0.0);
    return g;
}

std::size_t SlotGrid::index(int day, int slot) const {
    if (!covers(day)) throw std::out_of_range("SlotGrid: day " + std::to_string(day) + " outside coverage");
    if (slot < 1 || slot > kSlotsPerDay) throw std::out_of_range("SlotGrid: slot " + std::to_string(slot));
    return static_cast<std::size_t>(day - first_day) * kSlotsPerDay + static_cast<std::size_t>(slot - 1);
}

void CustomerTraces::validate(bool pv_present) const {
    if (base_demand_kw.num_days <= 0) throw std::invalid_argument("traces: empty coverage");
    auto same_shape = [&](const SlotGrid& g) {
        return g.first_day == base_demand_kw.first_day && g.num_days == base_demand_kw.num_days;
    };
    if (!same_shape(pv_kw) || !same_shape(hw_draw_l)) throw std::invalid_argument("traces: misaligned series");
    for (double v : base_demand_kw.values)
        if (v < 0.0 || !std::isfinite(v)) throw std::invalid_argument("traces: negative or non-finite demand");
    for (double v : pv_kw.values) {
        if (v < 0.0 || !std::isfinite(v)) throw std::invalid_argument("traces: negative or non-finite pv");
        if (!pv_present && v != 0.0) throw std::invalid_argument("traces: pv must be zero without a PV system");
    }
    for (double v : hw_draw_l.values)
        if (v < 0.0 || !std::isfinite(v)) throw std::invalid_argument("traces: negative or non-finite hot-water draw");
}

}  // namespace lvtariff
