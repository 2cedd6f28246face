#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rfan/patients.hpp"
#include "rfan/trial.hpp"

namespace rfan {

namespace detail {

// Ground-truth outcome of one test patient under arm w: noiseless mean
// when the generator is known, realized potential outcome otherwise.
inline double truth_outcome(const PatientRecord& p, int w) {
    if (p.mean0 && p.mean1) return w == 1 ? *p.mean1 : *p.mean0;
    return w == 1 ? p.y1 : p.y0;
}

inline double truth_cate(const PatientRecord& p) {
    return truth_outcome(p, 1) - truth_outcome(p, 0);
}

} // namespace detail

// V^pi estimated on the test set: average ground-truth outcome under the
// policy's assignments.
inline double policy_value(std::span<const int> policy,
                           std::span<const PatientRecord> test) {
    if (policy.size() != test.size() || test.empty()) {
        throw std::invalid_argument("policy_value: one decision per test patient");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        sum += detail::truth_outcome(test[i], policy[i]);
    }
    return sum / static_cast<double>(test.size());
}

// Policy value restricted to one subgroup label.
inline double subgroup_policy_value(std::span<const int> policy,
                                    std::span<const PatientRecord> test,
                                    const std::string& subgroup) {
    if (policy.size() != test.size()) {
        throw std::invalid_argument("policy_value: one decision per test patient");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (test[i].subgroup != subgroup) continue;
        sum += detail::truth_outcome(test[i], policy[i]);
        ++n;
    }
    if (n == 0) {
        throw std::runtime_error("metrics: subgroup '" + subgroup +
                                 "' is empty in the test set");
    }
    return sum / static_cast<double>(n);
}

inline double worst_case_policy_value(std::span<const int> policy,
                                      std::span<const PatientRecord> test,
                                      std::span<const std::string> subgroups) {
    if (subgroups.empty()) {
        throw std::invalid_argument("worst_case_policy_value: no subgroups declared");
    }
    double worst = std::numeric_limits<double>::infinity();
    for (const std::string& s : subgroups) {
        worst = std::min(worst, subgroup_policy_value(policy, test, s));
    }
    return worst;
}

inline double sqrt_pehe(std::span<const double> cate,
                        std::span<const PatientRecord> test) {
    if (cate.size() != test.size() || test.empty()) {
        throw std::invalid_argument("sqrt_pehe: one estimate per test patient");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double d = cate[i] - detail::truth_cate(test[i]);
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(test.size()));
}

// Percentage of test patients assigned differently from the ground-truth
// sign policy 1{tau(x) > 0}.
inline double policy_error_rate(std::span<const int> policy,
                                std::span<const PatientRecord> test) {
    if (policy.size() != test.size() || test.empty()) {
        throw std::invalid_argument("policy_error_rate: one decision per test patient");
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const int truth = detail::truth_cate(test[i]) > 0.0 ? 1 : 0;
        wrong += policy[i] != truth;
    }
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(test.size());
}

// Always-control value of a test set.
inline double control_value(std::span<const PatientRecord> test) {
    double sum = 0.0;
    for (const auto& p : test) sum += detail::truth_outcome(p, 0);
    return sum / static_cast<double>(test.size());
}

inline double subgroup_control_value(std::span<const PatientRecord> test,
                                     const std::string& subgroup) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : test) {
        if (p.subgroup != subgroup) continue;
        sum += detail::truth_outcome(p, 0);
        ++n;
    }
    if (n == 0) {
        throw std::runtime_error("metrics: subgroup '" + subgroup +
                                 "' is empty in the test set");
    }
    return sum / static_cast<double>(n);
}

// Everything reported per seed.
struct SeedMetrics {
    long seed = 0;
    int success = 0; // eta
    int realized_switch_step = 0;
    double policy_value = 0.0;
    double worst_case_policy_value = 0.0;
    double sqrt_pehe = 0.0;
    double policy_error_pct = 0.0;
    double ptmb_term = 0.0; // eta*V^pi + (1-eta)*V^0
    std::map<std::string, double> ptf_terms; // per subgroup
};

inline SeedMetrics evaluate_seed(const TrialResult& result, const Cohort& cohort,
                                 std::span<const std::string> subgroups) {
    const auto& test = cohort.test();
    SeedMetrics m;
    m.seed = result.seed;
    m.success = result.eta;
    m.realized_switch_step = result.realized_switch_step;
    m.policy_value = policy_value(result.policy_on_test, test);
    m.worst_case_policy_value =
        worst_case_policy_value(result.policy_on_test, test, subgroups);
    m.sqrt_pehe = sqrt_pehe(result.cate_on_test, test);
    m.policy_error_pct = policy_error_rate(result.policy_on_test, test);
    const double v0 = control_value(test);
    m.ptmb_term = result.eta == 1 ? m.policy_value : v0;
    for (const std::string& s : subgroups) {
        const double vs = result.eta == 1
                              ? subgroup_policy_value(result.policy_on_test, test, s)
                              : subgroup_control_value(test, s);
        m.ptf_terms[s] = vs;
    }
    return m;
}

// Post-trial mean benefit: mean over seeds of eta*V^pi + (1-eta)*V^0.
inline double ptmb(std::span<const TrialResult> results,
                   std::span<const Cohort> cohorts) {
    if (results.empty() || results.size() != cohorts.size()) {
        throw std::invalid_argument("ptmb: one cohort per result");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& test = cohorts[i].test();
        sum += results[i].eta == 1 ? policy_value(results[i].policy_on_test, test)
                                   : control_value(test);
    }
    return sum / static_cast<double>(results.size());
}

// Post-trial fairness: min over subgroups of the mean over seeds of the
// subgroup-conditional mixture (min of means, in that order).
inline double ptf(std::span<const TrialResult> results,
                  std::span<const Cohort> cohorts,
                  std::span<const std::string> subgroups) {
    if (results.empty() || results.size() != cohorts.size()) {
        throw std::invalid_argument("ptf: one cohort per result");
    }
    if (subgroups.empty()) {
        throw std::invalid_argument("ptf: no subgroups declared");
    }
    double worst = std::numeric_limits<double>::infinity();
    for (const std::string& s : subgroups) {
        double sum = 0.0;
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& test = cohorts[i].test();
            sum += results[i].eta == 1
                       ? subgroup_policy_value(results[i].policy_on_test, test, s)
                       : subgroup_control_value(test, s);
        }
        worst = std::min(worst, sum / static_cast<double>(results.size()));
    }
    return worst;
}

struct Aggregate {
    double mean = 0.0;
    double sem = std::numeric_limits<double>::quiet_NaN(); // NaN when n < 2
};

inline Aggregate aggregate(std::span<const double> values) {
    Aggregate a;
    const auto n = static_cast<double>(values.size());
    if (values.empty()) return a;
    double sum = 0.0;
    for (double v : values) sum += v;
    a.mean = sum / n;
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return a;
}

// Per-seed records plus the aggregates that make up one results row.
struct MetricsReport {
    std::vector<SeedMetrics> per_seed;
    Aggregate policy_value;
    Aggregate worst_case_policy_value;
    Aggregate sqrt_pehe;
    Aggregate policy_error_pct;
    Aggregate success;
    double success_rate = 0.0;
    double ptmb = 0.0;
    double ptf = 0.0;
};

inline MetricsReport make_report(std::vector<SeedMetrics> per_seed,
                                 std::span<const std::string> subgroups) {
    if (per_seed.empty()) {
        throw std::invalid_argument("make_report: no per-seed records");
    }
    MetricsReport r;
    r.per_seed = std::move(per_seed);
    const auto pull = [&](auto field) {
        std::vector<double> v;
        v.reserve(r.per_seed.size());
        for (const auto& s : r.per_seed) v.push_back(field(s));
        return v;
    };
    r.policy_value = aggregate(pull([](const SeedMetrics& s) { return s.policy_value; }));
    r.worst_case_policy_value =
        aggregate(pull([](const SeedMetrics& s) { return s.worst_case_policy_value; }));
    r.sqrt_pehe = aggregate(pull([](const SeedMetrics& s) { return s.sqrt_pehe; }));
    r.policy_error_pct =
        aggregate(pull([](const SeedMetrics& s) { return s.policy_error_pct; }));
    r.success = aggregate(
        pull([](const SeedMetrics& s) { return static_cast<double>(s.success); }));
    r.success_rate = r.success.mean;
    r.ptmb = aggregate(pull([](const SeedMetrics& s) { return s.ptmb_term; })).mean;
    double worst = std::numeric_limits<double>::infinity();
    for (const std::string& g : subgroups) {
        double sum = 0.0;
        for (const auto& s : r.per_seed) sum += s.ptf_terms.at(g);
        worst = std::min(worst, sum / static_cast<double>(r.per_seed.size()));
    }
    r.ptf = worst;
    return r;
}

} // namespace rfan
