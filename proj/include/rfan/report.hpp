#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfan/config.hpp"
#include "rfan/metrics.hpp"

namespace rfan {

// Everything produced for one (design, sweep value) cell.
struct DesignOutcome {
    std::string label;
    std::optional<int> sweep_value;
    MetricsReport report;
    std::vector<std::vector<StepTrace>> traces; // per seed, per step
};

namespace detail {

// 6 significant digits; the shortest C locale rendering of that rounding.
inline std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline std::string fmt_sem(double v) {
    return std::isnan(v) ? std::string{} : fmt6(v);
}

} // namespace detail

inline void write_results_csv(const std::vector<DesignOutcome>& outcomes,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("results: cannot write " + path);
    out << "design,sweep_value,policy_value,policy_value_sem,wc_policy_value,"
           "wc_policy_value_sem,success_rate,policy_error_pct,sqrt_pehe,"
           "sqrt_pehe_sem,ptmb,ptf\n";
    for (const DesignOutcome& o : outcomes) {
        const MetricsReport& r = o.report;
        out << o.label << ','
            << (o.sweep_value ? std::to_string(*o.sweep_value) : std::string{}) << ','
            << detail::fmt6(r.policy_value.mean) << ','
            << detail::fmt_sem(r.policy_value.sem) << ','
            << detail::fmt6(r.worst_case_policy_value.mean) << ','
            << detail::fmt_sem(r.worst_case_policy_value.sem) << ','
            << detail::fmt6(r.success_rate) << ','
            << detail::fmt6(r.policy_error_pct.mean) << ','
            << detail::fmt6(r.sqrt_pehe.mean) << ','
            << detail::fmt_sem(r.sqrt_pehe.sem) << ','
            << detail::fmt6(r.ptmb) << ',' << detail::fmt6(r.ptf) << '\n';
    }
}

namespace detail {

inline nlohmann::ordered_json json_aggregate(const Aggregate& a) {
    nlohmann::ordered_json j;
    j["mean"] = a.mean;
    if (std::isnan(a.sem)) {
        j["sem"] = nullptr;
    } else {
        j["sem"] = a.sem;
    }
    return j;
}

} // namespace detail

inline nlohmann::ordered_json results_json(const std::vector<DesignOutcome>& outcomes,
                                           const ExperimentSpec& spec) {
    nlohmann::ordered_json root;
    root["dataset"] = spec.dataset == DatasetKind::Synthetic ? "synthetic" : "csv";
    root["n_seeds"] = spec.n_seeds;
    root["base_seed"] = spec.base_seed;
    root["subgroups"] = spec.subgroups;
    switch (spec.sweep) {
        case SweepKind::None: root["sweep"] = nullptr; break;
        case SweepKind::N: root["sweep"] = "N"; break;
        case SweepKind::TStar: root["sweep"] = "t_star"; break;
    }
    root["designs"] = nlohmann::ordered_json::array();
    for (const DesignOutcome& o : outcomes) {
        nlohmann::ordered_json d;
        d["label"] = o.label;
        if (o.sweep_value) {
            d["sweep_value"] = *o.sweep_value;
        } else {
            d["sweep_value"] = nullptr;
        }
        nlohmann::ordered_json agg;
        agg["policy_value"] = detail::json_aggregate(o.report.policy_value);
        agg["wc_policy_value"] = detail::json_aggregate(o.report.worst_case_policy_value);
        agg["sqrt_pehe"] = detail::json_aggregate(o.report.sqrt_pehe);
        agg["policy_error_pct"] = detail::json_aggregate(o.report.policy_error_pct);
        agg["success_rate"] = o.report.success_rate;
        agg["ptmb"] = o.report.ptmb;
        agg["ptf"] = o.report.ptf;
        d["aggregate"] = agg;
        d["per_seed"] = nlohmann::ordered_json::array();
        for (const SeedMetrics& s : o.report.per_seed) {
            nlohmann::ordered_json js;
            js["seed"] = s.seed;
            js["success"] = s.success;
            js["realized_switch_step"] = s.realized_switch_step;
            js["policy_value"] = s.policy_value;
            js["wc_policy_value"] = s.worst_case_policy_value;
            js["sqrt_pehe"] = s.sqrt_pehe;
            js["policy_error_pct"] = s.policy_error_pct;
            js["ptmb_term"] = s.ptmb_term;
            js["ptf_terms"] = s.ptf_terms;
            d["per_seed"].push_back(std::move(js));
        }
        d["trace"] = nlohmann::ordered_json::array();
        for (const auto& seed_trace : o.traces) {
            nlohmann::ordered_json jt = nlohmann::ordered_json::array();
            for (const StepTrace& st : seed_trace) {
                nlohmann::ordered_json je;
                je["step"] = st.step;
                je["stage"] = st.randomized ? "randomized" : "augmented";
                je["arms"] = st.arm_counts;
                je["subgroups"] = st.subgroup_counts;
                jt.push_back(std::move(je));
            }
            d["trace"].push_back(std::move(jt));
        }
        root["designs"].push_back(std::move(d));
    }
    return root;
}

inline void write_results_json(const std::vector<DesignOutcome>& outcomes,
                               const ExperimentSpec& spec, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("results: cannot write " + path);
    out << results_json(outcomes, spec).dump(2) << '\n';
}

// One file per metric with a row per (design, sweep value); plot-ready.
inline void write_curves(const std::vector<DesignOutcome>& outcomes,
                         const std::string& dir) {
    struct Column {
        const char* name;
        Aggregate (*pick)(const MetricsReport&);
    };
    static const Column columns[] = {
        {"policy_value", [](const MetricsReport& r) { return r.policy_value; }},
        {"wc_policy_value",
         [](const MetricsReport& r) { return r.worst_case_policy_value; }},
        {"success_rate", [](const MetricsReport& r) { return r.success; }},
        {"policy_error_pct", [](const MetricsReport& r) { return r.policy_error_pct; }},
        {"sqrt_pehe", [](const MetricsReport& r) { return r.sqrt_pehe; }},
        {"ptmb", [](const MetricsReport& r) { return Aggregate{r.ptmb}; }},
        {"ptf", [](const MetricsReport& r) { return Aggregate{r.ptf}; }},
    };
    for (const Column& c : columns) {
        const std::string path =
            (std::filesystem::path(dir) / ("curve_" + std::string(c.name) + ".csv"))
                .string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("results: cannot write " + path);
        out << "design,sweep_value,mean,sem\n";
        for (const DesignOutcome& o : outcomes) {
            const Aggregate a = c.pick(o.report);
            out << o.label << ','
                << (o.sweep_value ? std::to_string(*o.sweep_value) : std::string{})
                << ',' << detail::fmt6(a.mean) << ',' << detail::fmt_sem(a.sem)
                << '\n';
        }
    }
}

} // namespace rfan
