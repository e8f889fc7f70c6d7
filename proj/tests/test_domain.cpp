#include "lvtariff/domain.hpp"

#include <cstdio>
#include <stdexcept>

#include "doctest.h"
#include "lvtariff/csv.hpp"

using namespace lvtariff;

TEST_CASE("calendar spans a plain 365-day year") {
    CHECK(month_of_day(1) == 1);
    CHECK(month_of_day(31) == 1);
    CHECK(month_of_day(32) == 2);
    CHECK(month_of_day(59) == 2);
    CHECK(month_of_day(60) == 3);
    CHECK(month_of_day(365) == 12);
    int total = 0;
    for (int m = 1; m <= 12; ++m) total += days_in_month(m);
    CHECK(total == 365);
    CHECK(first_day_of_month(1) == 1);
    CHECK(first_day_of_month(2) == 32);
    CHECK(first_day_of_month(12) == 335);
    CHECK_THROWS_AS(month_of_day(0), std::invalid_argument);
    CHECK_THROWS_AS(month_of_day(366), std::invalid_argument);
}

TEST_CASE("time slots know their clock position") {
    TimeSlot a(1, 1);
    CHECK(a.start_minute() == 0);
    TimeSlot b(40, 16);
    CHECK(b.start_minute() == 450);  // 07:30
    CHECK(b.month() == 2);
    CHECK_THROWS_AS(TimeSlot(0, 1), std::invalid_argument);
    CHECK_THROWS_AS(TimeSlot(1, 49), std::invalid_argument);
}

TEST_CASE("time-of-use periods partition the day") {
    CHECK(tou_period(1) == TouPeriod::OffPeak);    // 00:00
    CHECK(tou_period(14) == TouPeriod::OffPeak);   // 06:30
    CHECK(tou_period(15) == TouPeriod::Peak);      // 07:00
    CHECK(tou_period(16) == TouPeriod::Peak);      // 07:30
    CHECK(tou_period(18) == TouPeriod::Peak);      // 08:30
    CHECK(tou_period(19) == TouPeriod::Shoulder);  // 09:00
    CHECK(tou_period(34) == TouPeriod::Shoulder);  // 16:30
    CHECK(tou_period(35) == TouPeriod::Peak);      // 17:00
    CHECK(tou_period(40) == TouPeriod::Peak);      // 19:30
    CHECK(tou_period(41) == TouPeriod::Shoulder);  // 20:00
    CHECK(tou_period(44) == TouPeriod::Shoulder);  // 21:30
    CHECK(tou_period(45) == TouPeriod::OffPeak);   // 22:00
    CHECK(tou_period(48) == TouPeriod::OffPeak);

    int peak = 0, shoulder = 0, off = 0;
    for (int s = 1; s <= kSlotsPerDay; ++s) {
        switch (tou_period(s)) {
            case TouPeriod::Peak: ++peak; break;
            case TouPeriod::Shoulder: ++shoulder; break;
            case TouPeriod::OffPeak: ++off; break;
        }
    }
    CHECK(peak == 10);
    CHECK(shoulder == 20);
    CHECK(off == 18);
}

TEST_CASE("preset tariffs carry the published rates") {
    TariffSchedule flat = tariff_preset("Flat");
    CHECK(flat.kind == TariffKind::Flat);
    CHECK(flat.flat_rate.value() == doctest::Approx(0.313170));
    CHECK(flat.fixed_daily == doctest::Approx(1.5511));
    CHECK(flat.fit == doctest::Approx(0.09));
    CHECK_FALSE(flat.has_demand_charge());

    TariffSchedule tou = tariff_preset("ToU");
    CHECK(tou.tou_rates.value().off_peak == doctest::Approx(0.21340));
    CHECK(tou.tou_rates.value().shoulder == doctest::Approx(0.37147));
    CHECK(tou.tou_rates.value().peak == doctest::Approx(0.38588));

    TariffSchedule flatd = tariff_preset("FlatD");
    CHECK(flatd.flat_rate.value() == doctest::Approx(0.235018));
    CHECK(flatd.demand_charge.value() == doctest::Approx(4.2112));

    TariffSchedule toud = tariff_preset("ToUD");
    CHECK(toud.tou_rates.value().off_peak == doctest::Approx(0.188532));
    CHECK(toud.tou_rates.value().shoulder == doctest::Approx(0.279319));
    CHECK(toud.tou_rates.value().peak == doctest::Approx(0.286750));
    CHECK(toud.demand_charge.value() == doctest::Approx(4.2112));

    CHECK_THROWS_AS(tariff_preset("Nope"), std::invalid_argument);
}

TEST_CASE("slot price follows the period of the slot start") {
    TariffSchedule toud = tariff_preset("ToUD");
    CHECK(price_at(toud, TimeSlot(40, 16)) == doctest::Approx(0.286750));
    CHECK(price_at(toud, TimeSlot(40, 1)) == doctest::Approx(0.188532));
    CHECK(price_at(toud, TimeSlot(40, 20)) == doctest::Approx(0.279319));
    TariffSchedule flat = tariff_preset("Flat");
    for (int s = 1; s <= kSlotsPerDay; ++s) CHECK(price_at(flat, TimeSlot(1, s)) == doctest::Approx(0.313170));
}

TEST_CASE("tariff json round-trips") {
    for (const char* name : {"Flat", "ToU", "FlatD", "ToUD"}) {
        TariffSchedule t = tariff_preset(name);
        TariffSchedule back = tariff_from_json(tariff_to_json(t));
        CHECK(back.kind == t.kind);
        CHECK(back.fixed_daily == t.fixed_daily);
        CHECK(back.fit == t.fit);
        CHECK(back.flat_rate.has_value() == t.flat_rate.has_value());
        CHECK(back.demand_charge.has_value() == t.demand_charge.has_value());
        if (t.tou_rates) {
            CHECK(back.tou_rates.value().peak == t.tou_rates.value().peak);
        }
        CHECK(back.peak_variant == t.peak_variant);
    }
}

TEST_CASE("tariff validation rejects mismatched fields") {
    TariffSchedule t = tariff_preset("Flat");
    t.flat_rate.reset();
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);

    TariffSchedule d = tariff_preset("FlatD");
    d.demand_charge.reset();
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);

    TariffSchedule u = tariff_preset("ToU");
    u.tou_rates.reset();
    CHECK_THROWS_AS(u.validate(), std::invalid_argument);

    TariffSchedule neg = tariff_preset("Flat");
    neg.flat_rate = -0.1;
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}

TEST_CASE("battery parameters are sanity-checked") {
    BatteryParams b;
    b.capacity_kwh = 10.0;
    b.soc_min_kwh = 1.0;
    b.p_charge_max_kw = 5.0;
    b.p_discharge_max_kw = 5.0;
    b.eta_charge = 0.9487;
    b.eta_discharge = 0.9487;
    b.soc_initial_kwh = 5.0;
    CHECK_NOTHROW(b.validate());

    BatteryParams bad = b;
    bad.soc_initial_kwh = 12.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = b;
    bad.eta_charge = 1.2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = b;
    bad.capacity_kwh = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = b;
    bad.soc_min_kwh = 11.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("water heater defaults describe the 160 L tank") {
    EwhParams e;
    CHECK(e.heat_capacity_kj_c() == doctest::Approx(668.8));
    CHECK_NOTHROW(e.validate());
    EwhParams bad = e;
    bad.t_min_c = 90.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = e;
    bad.volume_l = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("scenario and tariff names parse both ways") {
    CHECK(scenario_from_string("I") == Scenario::I);
    CHECK(scenario_from_string("II") == Scenario::II);
    CHECK(scenario_from_string("III") == Scenario::III);
    CHECK(std::string(to_string(Scenario::III)) == "III");
    CHECK(tariff_kind_from_string("ToUD") == TariffKind::ToUD);
    CHECK(std::string(to_string(TariffKind::FlatD)) == "FlatD");
    CHECK_THROWS_AS(scenario_from_string("IV"), std::invalid_argument);
    CHECK_THROWS_AS(tariff_kind_from_string("weird"), std::invalid_argument);
}

TEST_CASE("slot grids are day-major and bounds-checked") {
    SlotGrid g = SlotGrid::zeros(10, 3);
    CHECK(g.covers(10));
    CHECK(g.covers(12));
    CHECK_FALSE(g.covers(13));
    CHECK(g.covers(10, 3));
    CHECK_FALSE(g.covers(11, 3));
    g.at(11, 5) = 2.5;
    CHECK(g.values[kSlotsPerDay + 4] == 2.5);
    CHECK(g.at(11, 5) == 2.5);
    CHECK_THROWS_AS(g.at(13, 1), std::out_of_range);
    CHECK_THROWS_AS(g.at(10, 0), std::out_of_range);
    CHECK_THROWS_AS(g.at(10, 49), std::out_of_range);
}

TEST_CASE("customer traces validate shape and sign") {
    CustomerTraces tr;
    tr.base_demand_kw = SlotGrid::zeros(1, 2);
    tr.pv_kw = SlotGrid::zeros(1, 2);
    tr.hw_draw_l = SlotGrid::zeros(1, 2);
    CHECK_NOTHROW(tr.validate(true));

    CustomerTraces off = tr;
    off.pv_kw = SlotGrid::zeros(2, 2);
    CHECK_THROWS_AS(off.validate(true), std::invalid_argument);

    CustomerTraces neg = tr;
    neg.base_demand_kw.at(1, 1) = -0.5;
    CHECK_THROWS_AS(neg.validate(true), std::invalid_argument);

    CustomerTraces pv_without = tr;
    pv_without.pv_kw.at(1, 10) = 1.0;
    CHECK_THROWS_AS(pv_without.validate(false), std::invalid_argument);
    CHECK_NOTHROW(pv_without.validate(true));
}

TEST_CASE("csv io round-trips numbers exactly") {
    const std::string path = "domain_csv_test.csv";
    {
        CsvWriter w(path, "a,b,c");
        w.field(0.1);
        w.field(12345L);
        w.field(std::string("x"));
        w.end_row();
        w.field(-2.5e-7);
        w.field(0L);
        w.field(std::string(""));
        w.end_row();
        w.close();
    }
    CsvReader r(path, "a,b,c");
    std::vector<std::string> f;
    REQUIRE(r.next(f));
    CHECK(parse_double(f[0], "a") == 0.1);
    CHECK(parse_long(f[1], "b") == 12345);
    CHECK(f[2] == "x");
    REQUIRE(r.next(f));
    CHECK(parse_double(f[0], "a") == -2.5e-7);
    CHECK_FALSE(r.next(f));
    std::remove(path.c_str());

    CHECK_THROWS_AS(CsvReader(path + ".missing", "a,b,c"), DataError);
    CHECK_THROWS_AS(parse_double("12x", "ctx"), DataError);
}

TEST_CASE("customer records insist on scenario-consistent gear") {
    CustomerRecord c;
    c.id = "c1";
    c.scenario = Scenario::I;
    c.tariff = tariff_preset("Flat");
    CHECK_NOTHROW(c.validate());

    c.scenario = Scenario::II;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);  // PV missing
    c.pv_size_kwp = 4.0;
    CHECK_NOTHROW(c.validate());

    c.scenario = Scenario::III;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);  // battery missing
    BatteryParams b;
    b.capacity_kwh = 8.0;
    b.soc_min_kwh = 0.8;
    b.p_charge_max_kw = 4.0;
    b.p_discharge_max_kw = 4.0;
    b.eta_charge = 0.9487;
    b.eta_discharge = 0.9487;
    b.soc_initial_kwh = 4.0;
    c.battery = b;
    CHECK_NOTHROW(c.validate());

    c.grid_limit_kw = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
