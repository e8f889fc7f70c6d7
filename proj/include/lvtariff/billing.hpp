#pragma once

#include <map>
#include <string>
#include <vector>

#include "lvtariff/domain.hpp"

namespace lvtariff {

// One calendar month's charges. Fixed charges scale with the days the series
// actually covers, so partial-year studies bill exactly what they simulate.
struct MonthBill {
    int month = 0;  // 1..12
    int days_covered = 0;
    double fixed = 0.0;
    double energy = 0.0;
    double export_credit = 0.0;
    double demand = 0.0;

    double total() const { return fixed + energy - export_credit + demand; }
};

struct BillBreakdown {
    std::vector<MonthBill> months;  // ascending month, covered months only
    double fixed = 0.0;
    double energy = 0.0;
    double export_credit = 0.0;
    double demand = 0.0;
    double total = 0.0;
};

// Chargeable peak of each covered month. MonthlyMax takes the single largest
// slot; TopFourDailyAvg averages the four largest daily maxima (or all of
// them when the month covers fewer than four days).
std::map<int, double> monthly_peaks(const SlotGrid& import_kw, PeakVariant variant);

// Bills a metered import/export pair over whatever whole-day span the grids
// cover. Demand charges apply only when the tariff carries one.
BillBreakdown annual_cost(const TariffSchedule& tariff, const SlotGrid& import_kw,
                          const SlotGrid& export_kw);

struct CustomerBill {
    std::string customer_id;
    std::string tariff_name;
    BillBreakdown bill;
};

inline constexpr const char* kBillCsvHeader =
    "customer_id,tariff,month,fixed,energy,export_credit,demand,total";

void write_bill_csv(const std::string& path, const std::vector<CustomerBill>& bills);
std::vector<CustomerBill> read_bill_csv(const std::string& path);

}  // namespace lvtariff
