#pragma once

#include <Eigen/Core>
#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rfan/errors.hpp"
#include "rfan/rng.hpp"

namespace rfan {

// Simulation oracle for one patient: covariates, both realized potential
// outcomes, and (when the generating process is known) the noiseless
// conditional means.
struct PatientRecord {
    int id = 0;
    Eigen::VectorXd x;
    double y0 = 0.0;
    double y1 = 0.0;
    std::optional<double> mean0;
    std::optional<double> mean1;
    std::string subgroup; // empty = majority
};

// Noiseless conditional means of the synthetic generator.
inline double synthetic_mean(double x, int arm) {
    return arm == 1 ? 2.0 * x + 3.0 : 1.0 + 2.0 * std::sin(2.0 * x);
}

inline std::string synthetic_subgroup(double x) {
    if (x < -1.2) return "s1";
    if (x >= 1.3) return "s2";
    return std::string{};
}

inline const std::vector<std::string>& synthetic_subgroups() {
    static const std::vector<std::string> groups{"s1", "s2"};
    return groups;
}

// Pool + held-out test set for one trial replication. Potential outcomes
// are realized once at generation; reveal() consumes pool patients.
class Cohort {
public:
    Cohort(std::vector<PatientRecord> pool, std::vector<PatientRecord> test, long seed)
        : pool_(std::move(pool)), test_(std::move(test)), seed_(seed),
          acquired_(pool_.size(), false) {
        for (std::size_t i = 0; i < pool_.size(); ++i) {
            if (!by_id_.emplace(pool_[i].id, i).second) {
                throw std::invalid_argument("cohort: duplicate pool id " +
                                            std::to_string(pool_[i].id));
            }
        }
    }

    const std::vector<PatientRecord>& pool() const { return pool_; }
    const std::vector<PatientRecord>& test() const { return test_; }
    long seed() const { return seed_; }

    // Pool indices still available for acquisition, in pool order.
    std::vector<int> available() const {
        std::vector<int> idx;
        idx.reserve(pool_.size());
        for (std::size_t i = 0; i < pool_.size(); ++i) {
            if (!acquired_[i]) idx.push_back(static_cast<int>(i));
        }
        return idx;
    }

    std::size_t available_count() const {
        std::size_t n = 0;
        for (bool a : acquired_) n += !a;
        return n;
    }

    // Reveal the outcome of patient `id` under arm `w` and consume them.
    double reveal(int id, int w) {
        const auto it = by_id_.find(id);
        if (it == by_id_.end()) {
            throw TrialError("reveal: unknown patient id " + std::to_string(id));
        }
        if (acquired_[it->second]) {
            throw TrialError("reveal: patient " + std::to_string(id) +
                             " already acquired");
        }
        acquired_[it->second] = true;
        const PatientRecord& p = pool_[it->second];
        return w == 1 ? p.y1 : p.y0;
    }

private:
    std::vector<PatientRecord> pool_;
    std::vector<PatientRecord> test_;
    long seed_ = 0;
    std::vector<bool> acquired_;
    std::unordered_map<int, std::size_t> by_id_;
};

namespace detail {

inline PatientRecord draw_synthetic_patient(int id, Rng& rng) {
    PatientRecord p;
    p.id = id;
    const double x = rng.normal();
    p.x = Eigen::VectorXd::Constant(1, x);
    p.mean0 = synthetic_mean(x, 0);
    p.mean1 = synthetic_mean(x, 1);
    p.y0 = *p.mean0 + rng.normal();
    p.y1 = *p.mean1 + rng.normal();
    p.subgroup = synthetic_subgroup(x);
    return p;
}

} // namespace detail

// Synthetic cohort: x ~ N(0,1), outcome noise N(0,1) per arm. The pool is
// drawn from stream `seed`, the test set from `seed + 1`.
inline Cohort synthetic_cohort(int n_pool, int n_test, long seed) {
    if (n_pool < 1 || n_test < 1) {
        throw std::invalid_argument("synthetic_cohort: sizes must be >= 1");
    }
    Rng pool_rng(static_cast<std::uint64_t>(seed));
    Rng test_rng(static_cast<std::uint64_t>(seed + 1));
    std::vector<PatientRecord> pool;
    pool.reserve(static_cast<std::size_t>(n_pool));
    for (int i = 0; i < n_pool; ++i) {
        pool.push_back(detail::draw_synthetic_patient(i, pool_rng));
    }
    std::vector<PatientRecord> test;
    test.reserve(static_cast<std::size_t>(n_test));
    for (int i = 0; i < n_test; ++i) {
        test.push_back(detail::draw_synthetic_patient(n_pool + i, test_rng));
    }
    return Cohort(std::move(pool), std::move(test), seed);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline double parse_cell(const std::string& cell, int line_no,
                         const std::string& column) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &pos);
    } catch (const std::exception&) {
        throw ParseError("csv: non-numeric value '" + cell + "' at line " +
                         std::to_string(line_no) + ", column " + column);
    }
    while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) {
        ++pos;
    }
    if (pos != cell.size() || !std::isfinite(v)) {
        throw ParseError("csv: non-numeric value '" + cell + "' at line " +
                         std::to_string(line_no) + ", column " + column);
    }
    return v;
}

} // namespace detail

// Potential-outcomes CSV loader. Fixed header
//   id,subgroup,x_0,...,x_{d-1},y0,y1
// with d inferred from the header. Rows are split into pool and test by a
// seeded shuffle at split_fraction.
inline Cohort load_outcomes_csv(const std::string& path, double split_fraction,
                                long seed) {
    if (!(split_fraction >= 0.0 && split_fraction <= 1.0)) {
        throw std::invalid_argument("csv: split fraction outside [0,1]");
    }
    std::ifstream in(path);
    if (!in) {
        throw ParseError("csv: cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("csv: empty file " + path);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = detail::split_csv_line(line);
    if (header.size() < 5 || header[0] != "id" || header[1] != "subgroup" ||
        header[header.size() - 2] != "y0" || header.back() != "y1") {
        throw ParseError("csv: header must be id,subgroup,x_0,...,y0,y1");
    }
    const int d = static_cast<int>(header.size()) - 4;
    for (int j = 0; j < d; ++j) {
        const std::string want = "x_" + std::to_string(j);
        if (header[static_cast<std::size_t>(j) + 2] != want) {
            throw ParseError("csv: expected column '" + want + "', found '" +
                             header[static_cast<std::size_t>(j) + 2] + "'");
        }
    }

    std::vector<PatientRecord> rows;
    std::unordered_map<int, int> seen_ids;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("csv: line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        }
        PatientRecord p;
        p.id = static_cast<int>(detail::parse_cell(cells[0], line_no, "id"));
        if (const auto [it, fresh] = seen_ids.emplace(p.id, line_no); !fresh) {
            throw ParseError("csv: duplicate id " + std::to_string(p.id) +
                             " at line " + std::to_string(line_no) +
                             " (first seen at line " + std::to_string(it->second) +
                             ")");
        }
        p.subgroup = cells[1];
        p.x.resize(d);
        for (int j = 0; j < d; ++j) {
            p.x(j) = detail::parse_cell(cells[static_cast<std::size_t>(j) + 2],
                                        line_no, header[static_cast<std::size_t>(j) + 2]);
        }
        p.y0 = detail::parse_cell(cells[cells.size() - 2], line_no, "y0");
        p.y1 = detail::parse_cell(cells.back(), line_no, "y1");
        rows.push_back(std::move(p));
    }
    if (rows.empty()) {
        throw ParseError("csv: no data rows in " + path);
    }

    std::vector<int> order(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng(Rng::mix(static_cast<std::uint64_t>(seed), 0x63737673706c6974ULL));
    rng.shuffle(order);
    const auto n_pool = static_cast<std::size_t>(
        std::llround(split_fraction * static_cast<double>(rows.size())));
    std::vector<PatientRecord> pool, test;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& dst = i < n_pool ? pool : test;
        dst.push_back(std::move(rows[static_cast<std::size_t>(order[i])]));
    }
    return Cohort(std::move(pool), std::move(test), seed);
}

} // namespace rfan
