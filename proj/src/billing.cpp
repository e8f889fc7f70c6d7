#include "lvtariff/billing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lvtariff/csv.hpp"
#include "lvtariff/errors.hpp"

namespace lvtariff {

namespace {

void check_nonnegative(const SlotGrid& g, const char* label) {
    for (int d = g.first_day; d <= g.last_day(); ++d) {
        for (int s = 1; s <= kSlotsPerDay; ++s) {
            if (g.at(d, s) < 0.0) {
                throw std::invalid_argument(std::string(label) + " is negative on day " +
                                            std::to_string(d) + " slot " + std::to_string(s));
            }
        }
    }
}

}  // namespace

std::map<int, double> monthly_peaks(const SlotGrid& import_kw, PeakVariant variant) {
    if (import_kw.empty()) throw std::invalid_argument("monthly_peaks: empty import series");
    check_nonnegative(import_kw, "import");

    std::map<int, std::vector<double>> daily_max;  // month -> per-day maxima
    for (int d = import_kw.first_day; d <= import_kw.last_day(); ++d) {
        double peak = 0.0;
        for (int s = 1; s <= kSlotsPerDay; ++s) peak = std::max(peak, import_kw.at(d, s));
        daily_max[month_of_day(d)].push_back(peak);
    }

    std::map<int, double> out;
    for (auto& [month, peaks] : daily_max) {
        if (variant == PeakVariant::MonthlyMax) {
            out[month] = *std::max_element(peaks.begin(), peaks.end());
        } else {
            std::sort(peaks.begin(), peaks.end(), std::greater<>());
            const std::size_t take = std::min<std::size_t>(4, peaks.size());
            double sum = 0.0;
            for (std::size_t i = 0; i < take; ++i) sum += peaks[i];
            out[month] = sum / static_cast<double>(take);
        }
    }
    return out;
}

BillBreakdown annual_cost(const TariffSchedule& tariff, const SlotGrid& import_kw,
                          const SlotGrid& export_kw) {
    tariff.validate();
    if (import_kw.empty()) throw std::invalid_argument("annual_cost: empty import series");
    if (export_kw.first_day != import_kw.first_day || export_kw.num_days != import_kw.num_days) {
        throw std::invalid_argument("annual_cost: import and export spans differ");
    }
    check_nonnegative(import_kw, "import");
    check_nonnegative(export_kw, "export");

    std::map<int, MonthBill> by_month;
    for (int d = import_kw.first_day; d <= import_kw.last_day(); ++d) {
        MonthBill& mb = by_month[month_of_day(d)];
        mb.month = month_of_day(d);
        mb.days_covered += 1;
        mb.fixed += tariff.fixed_daily;
        for (int s = 1; s <= kSlotsPerDay; ++s) {
            mb.energy += price_at(tariff, TimeSlot(d, s)) * import_kw.at(d, s) * kSlotHours;
            mb.export_credit += tariff.fit * export_kw.at(d, s) * kSlotHours;
        }
    }

    if (tariff.has_demand_charge()) {
        const std::map<int, double> peaks = monthly_peaks(import_kw, tariff.peak_variant);
        for (auto [month, peak] : peaks) by_month.at(month).demand = tariff.demand_charge.value() * peak;
    }

    BillBreakdown out;
    for (auto& [month, mb] : by_month) {
        out.fixed += mb.fixed;
        out.energy += mb.energy;
        out.export_credit += mb.export_credit;
        out.demand += mb.demand;
        out.months.push_back(mb);
    }
    out.total = out.fixed + out.energy - out.export_credit + out.demand;
    return out;
}

void write_bill_csv(const std::string& path, const std::vector<CustomerBill>& bills) {
    CsvWriter w(path, kBillCsvHeader);
    for (const CustomerBill& cb : bills) {
        for (const MonthBill& mb : cb.bill.months) {
            w.field(cb.customer_id);
            w.field(cb.tariff_name);
            w.field(static_cast<long>(mb.month));
            w.field(mb.fixed);
            w.field(mb.energy);
            w.field(mb.export_credit);
            w.field(mb.demand);
            w.field(mb.total());
            w.end_row();
        }
    }
    w.close();
}

std::vector<CustomerBill> read_bill_csv(const std::string& path) {
    CsvReader r(path, kBillCsvHeader);
    std::vector<CustomerBill> out;
    std::vector<std::string> f;
    while (r.next(f)) {
        if (f.size() != 8) throw DataError("bill csv: wrong field count at " + r.where());
        if (out.empty() || out.back().customer_id != f[0] || out.back().tariff_name != f[1]) {
            CustomerBill cb;
            cb.customer_id = f[0];
            cb.tariff_name = f[1];
            out.push_back(cb);
        }
        MonthBill mb;
        mb.month = static_cast<int>(parse_long(f[2], r.where()));
        mb.fixed = parse_double(f[3], r.where());
        mb.energy = parse_double(f[4], r.where());
        mb.export_credit = parse_double(f[5], r.where());
        mb.demand = parse_double(f[6], r.where());
        BillBreakdown& bb = out.back().bill;
        bb.months.push_back(mb);
        bb.fixed += mb.fixed;
        bb.energy += mb.energy;
        bb.export_credit += mb.export_credit;
        bb.demand += mb.demand;
        bb.total += mb.total();
    }
    return out;
}

}  // namespace lvtariff
