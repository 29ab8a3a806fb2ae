#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "demandscope/common.hpp"
#include "demandscope/data/csv.hpp"

namespace demandscope::data {

struct BillingRecord {
    std::string customer_id;
    std::string building_id;
    double lon = 0, lat = 0;
    Month connection{};
    std::vector<std::pair<Month, double>> bills;  // strictly increasing months
};

struct StableConsumption {
    std::string building_id;
    double mean_kwh_per_month = 0;
    int n_months_used = 0;
};

// One row per bill: customer_id,building_id,lon,lat,connection_month,bill_month,kwh
inline std::vector<BillingRecord> load_billing_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int c_cust = t.column("customer_id");
    const int c_bld = t.column("building_id");
    const int c_lon = t.column("lon");
    const int c_lat = t.column("lat");
    const int c_conn = t.column("connection_month");
    const int c_bm = t.column("bill_month");
    const int c_kwh = t.column("kwh");

    std::map<std::string, BillingRecord> by_customer;
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const std::string where = path + ":" + std::to_string(t.line_numbers[i]);
        const double kwh = csv_double(t, i, c_kwh);
        if (!std::isfinite(kwh)) throw ParseError(where + ": non-finite kwh");
        if (kwh < 0) throw ParseError(where + ": negative kwh");
        const std::string& cust = t.rows[i][static_cast<size_t>(c_cust)];
        auto [it, fresh] = by_customer.try_emplace(cust);
        BillingRecord& r = it->second;
        if (fresh) {
            r.customer_id = cust;
            r.building_id = t.rows[i][static_cast<size_t>(c_bld)];
            r.lon = csv_double(t, i, c_lon);
            r.lat = csv_double(t, i, c_lat);
            r.connection = parse_month(t.rows[i][static_cast<size_t>(c_conn)]);
        } else if (r.building_id != t.rows[i][static_cast<size_t>(c_bld)]) {
            throw ParseError(where + ": customer " + cust + " maps to two buildings");
        }
        r.bills.emplace_back(parse_month(t.rows[i][static_cast<size_t>(c_bm)]), kwh);
    }

    std::vector<BillingRecord> out;
    out.reserve(by_customer.size());
    for (auto& [cust, r] : by_customer) {
        std::sort(r.bills.begin(), r.bills.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (size_t i = 1; i < r.bills.size(); ++i)
            if (!(r.bills[i - 1].first < r.bills[i].first))
                throw ParseError(path + ": duplicate bill month " +
                                 format_month(r.bills[i].first) + " for customer " + cust);
        out.push_back(std::move(r));
    }
    return out;
}

// Buildings served by more than one customer account are dropped.
inline std::vector<BillingRecord> single_customer_records(std::vector<BillingRecord> records,
                                                          int* n_dropped = nullptr) {
    std::map<std::string, int> customers_per_building;
    for (const auto& r : records) customers_per_building[r.building_id] += 1;
    std::vector<BillingRecord> out;
    int dropped = 0;
    for (auto& r : records) {
        if (customers_per_building[r.building_id] == 1)
            out.push_back(std::move(r));
        else
            ++dropped;
    }
    if (n_dropped) *n_dropped = dropped;
    return out;
}

// Mean of bills dated at least 12 months after connection.
inline StableConsumption compute_stable_consumption(const BillingRecord& r) {
    const Month cutoff = r.connection.plus_months(12);
    double sum = 0;
    int n = 0;
    for (const auto& [month, kwh] : r.bills) {
        if (month < cutoff) continue;
        sum += kwh;
        ++n;
    }
    if (n == 0)
        throw NoStableBills("no bill at or after " + format_month(cutoff) + " for building " +
                            r.building_id);
    StableConsumption out;
    out.building_id = r.building_id;
    out.mean_kwh_per_month = sum / n;
    out.n_months_used = n;
    return out;
}

}  // namespace demandscope::data
