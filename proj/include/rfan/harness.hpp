#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rfan/report.hpp"

namespace rfan {

inline Cohort make_cohort(const ExperimentSpec& spec, long seed) {
    if (spec.dataset == DatasetKind::Synthetic) {
        return synthetic_cohort(spec.n_pool, spec.n_test, seed);
    }
    return load_outcomes_csv(spec.csv_path, spec.split_fraction, seed);
}

namespace detail {

inline TrialConfig config_for(const DesignSpec& design, SweepKind sweep,
                              std::optional<int> sweep_value) {
    TrialConfig cfg = design.trial;
    if (sweep_value) {
        if (sweep == SweepKind::N) {
            cfg.total_steps = *sweep_value / cfg.batch_size;
        } else if (sweep == SweepKind::TStar) {
            cfg.t_star = *sweep_value;
        }
    }
    return cfg;
}

} // namespace detail

// Runs one design cell: n_seeds independent trials, per-seed metrics, and
// the aggregate report.
inline DesignOutcome run_design(const ExperimentSpec& spec, const DesignSpec& design,
                                std::optional<int> sweep_value, int jobs) {
    const TrialConfig base = detail::config_for(design, spec.sweep, sweep_value);
    DesignOutcome out;
    out.label = design.label;
    out.sweep_value = sweep_value;

    std::vector<std::optional<SeedMetrics>> metrics(
        static_cast<std::size_t>(spec.n_seeds));
    std::vector<std::vector<StepTrace>> traces(static_cast<std::size_t>(spec.n_seeds));
    std::vector<std::string> failures(static_cast<std::size_t>(spec.n_seeds));

    const auto worker = [&](int k) {
        TrialConfig cfg = base;
        cfg.seed = spec.base_seed + k;
        try {
            Cohort cohort = make_cohort(spec, cfg.seed);
            const TrialResult result = run_trial(cfg, cohort);
            metrics[static_cast<std::size_t>(k)] =
                evaluate_seed(result, cohort, spec.subgroups);
            traces[static_cast<std::size_t>(k)] = result.trace;
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(k)] = e.what();
        }
    };
    if (jobs <= 1) {
        for (int k = 0; k < spec.n_seeds; ++k) worker(k);
    } else {
        std::vector<std::thread> pool;
        for (int chunk = 0; chunk < spec.n_seeds; chunk += jobs) {
            const int hi = std::min(spec.n_seeds, chunk + jobs);
            for (int k = chunk; k < hi; ++k) pool.emplace_back(worker, k);
            for (auto& th : pool) th.join();
            pool.clear();
        }
    }
    for (int k = 0; k < spec.n_seeds; ++k) {
        if (!failures[static_cast<std::size_t>(k)].empty()) {
            throw TrialError("design '" + design.label + "' seed " +
                             std::to_string(spec.base_seed + k) + ": " +
                             failures[static_cast<std::size_t>(k)]);
        }
    }
    std::vector<SeedMetrics> per_seed;
    per_seed.reserve(static_cast<std::size_t>(spec.n_seeds));
    for (auto& m : metrics) per_seed.push_back(std::move(*m));
    out.report = make_report(std::move(per_seed), spec.subgroups);
    out.traces = std::move(traces);
    return out;
}

// Full experiment: every design, times every sweep value when sweeping.
// Writes results.csv, results.json and (when sweeping) per-metric curves.
inline std::vector<DesignOutcome> run_experiment_spec(const ExperimentSpec& spec,
                                                      int jobs,
                                                      std::ostream& log) {
    std::vector<std::optional<int>> sweep_cells;
    if (spec.sweep == SweepKind::None) {
        sweep_cells.push_back(std::nullopt);
    } else {
        for (int v : spec.sweep_values) sweep_cells.push_back(v);
    }
    std::vector<DesignOutcome> outcomes;
    for (const std::optional<int>& cell : sweep_cells) {
        for (const DesignSpec& design : spec.designs) {
            log << "running design '" << design.label << "'";
            if (cell) log << " at sweep value " << *cell;
            log << " (" << spec.n_seeds << " seeds)\n" << std::flush;
            outcomes.push_back(run_design(spec, design, cell, jobs));
        }
    }
    return outcomes;
}

inline void write_outputs(const std::vector<DesignOutcome>& outcomes,
                          const ExperimentSpec& spec) {
    std::filesystem::create_directories(spec.out_dir);
    const std::filesystem::path dir(spec.out_dir);
    write_results_csv(outcomes, (dir / "results.csv").string());
    write_results_json(outcomes, spec, (dir / "results.json").string());
    if (spec.sweep != SweepKind::None) {
        write_curves(outcomes, spec.out_dir);
    }
}

} // namespace rfan
