#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lvtariff {

constexpr int kSlotsPerDay = 48;
constexpr int kDaysPerYear = 365;
constexpr int kMonthsPerYear = 12;
constexpr double kSlotHours = 0.5;  // half-hourly resolution throughout

// Calendar: non-leap year, day 1 = Jan 1, slot 1 = 00:00-00:30.
int month_of_day(int day);        // day 1..365 -> month 1..12
int days_in_month(int month);     // month 1..12
int first_day_of_month(int month);

struct TimeSlot {
    int day;   // 1..365
    int slot;  // 1..48

    TimeSlot(int day, int slot);
    int month() const { return month_of_day(day); }
    // minutes past midnight at which the slot starts
    int start_minute() const { return (slot - 1) * 30; }
};

enum class TouPeriod { OffPeak, Shoulder, Peak };

// Peak 07:00-09:00 and 17:00-20:00, shoulder 09:00-17:00 and 20:00-22:00,
// off-peak 22:00-07:00. A slot belongs to the period containing its start.
TouPeriod tou_period(int slot);

enum class TariffKind { Flat, ToU, FlatD, ToUD };
enum class PeakVariant { MonthlyMax, TopFourDailyAvg };

struct TouRates {
    double off_peak = 0.0;  // $/kWh
    double shoulder = 0.0;
    double peak = 0.0;
};

struct TariffSchedule {
    TariffKind kind = TariffKind::Flat;
    double fixed_daily = 0.0;  // $/day
    std::optional<double> flat_rate;            // $/kWh, Flat/FlatD
    std::optional<TouRates> tou_rates;          // ToU/ToUD
    std::optional<double> demand_charge;        // $/kW/month, FlatD/ToUD
    double fit = 0.0;                           // feed-in credit, $/kWh
    PeakVariant peak_variant = PeakVariant::MonthlyMax;

    bool is_tou() const { return kind == TariffKind::ToU || kind == TariffKind::ToUD; }
    bool has_demand_charge() const { return kind == TariffKind::FlatD || kind == TariffKind::ToUD; }
    void validate() const;
};

// Energy rate applying to a slot; pure in (kind, slot).
double price_at(const TariffSchedule& tariff, const TimeSlot& ts);

// Built-in retail tariffs. Demand-based presets carry the network demand
// charge passed through unchanged. Names: Flat, ToU, FlatD, ToUD.
TariffSchedule tariff_preset(std::string_view name);

TariffSchedule tariff_from_json(const nlohmann::json& j);
nlohmann::json tariff_to_json(const TariffSchedule& t);

const char* to_string(TariffKind k);
TariffKind tariff_kind_from_string(std::string_view s);

struct BatteryParams {
    double capacity_kwh = 0.0;
    double soc_min_kwh = 0.0;
    double p_charge_max_kw = 0.0;
    double p_discharge_max_kw = 0.0;
    double eta_charge = 1.0;
    double eta_discharge = 1.0;
    double soc_initial_kwh = 0.0;

    void validate() const;
};

struct EwhParams {
    double volume_l = 160.0;
    double element_kw = 3.6;
    double surface_m2 = 1.768;
    double conductance_w_m2c = 1.0;
    double density_kg_m3 = 1000.0;
    double specific_heat_kj_kgc = 4.18;
    double eta_thermal = 1.0;
    double t_min_c = 60.0;
    double t_max_c = 82.0;
    double t_inlet_c = 15.0;
    double t_ambient_c = 20.0;
    double t_initial_c = 60.0;

    // rho * V * c, kJ/degC
    double heat_capacity_kj_c() const { return density_kg_m3 * (volume_l / 1000.0) * specific_heat_kj_kgc; }
    void validate() const;
};

enum class Scenario { I, II, III };

const char* to_string(Scenario s);
Scenario scenario_from_string(std::string_view s);

struct CustomerRecord {
    std::string id;
    Scenario scenario = Scenario::I;
    TariffSchedule tariff;
    std::optional<BatteryParams> battery;  // Scenario III
    EwhParams ewh;
    std::optional<double> pv_size_kwp;     // Scenario II/III
    double inverter_eta = 1.0;
    double grid_limit_kw = 15.0;

    void validate() const;
};

// Half-hourly series over a contiguous run of days, day-major.
struct SlotGrid {
    int first_day = 1;
    int num_days = 0;
    std::vector<double> values;

    static SlotGrid zeros(int first_day, int num_days);

    bool empty() const { return num_days == 0; }
    int last_day() const { return first_day + num_days - 1; }
    bool covers(int day) const { return day >= first_day && day <= last_day(); }
    bool covers(int day, int n_days) const { return covers(day) && covers(day + n_days - 1); }

    double& at(int day, int slot) { return values[index(day, slot)]; }
    double at(int day, int slot) const { return values[index(day, slot)]; }

    std::size_t index(int day, int slot) const;
};

struct CustomerTraces {
    SlotGrid base_demand_kw;
    SlotGrid pv_kw;
    SlotGrid hw_draw_l;

    int first_day() const { return base_demand_kw.first_day; }
    int num_days() const { return base_demand_kw.num_days; }
    // pv must be identically zero when the customer has no PV
    void validate(bool pv_present) const;
};

}  // namespace lvtariff
