#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rfan/trial.hpp"

namespace rfan {

struct DesignSpec {
    std::string label;
    TrialConfig trial;
};

enum class DatasetKind { Synthetic, Csv };
enum class SweepKind { None, N, TStar };

// Parsed experiment file: dataset source, designs, seeds, outputs.
struct ExperimentSpec {
    DatasetKind dataset = DatasetKind::Synthetic;
    std::string csv_path;
    double split_fraction = 0.8;
    int n_pool = 10000;
    int n_test = 2000;
    int n_seeds = 10;
    long base_seed = 0;
    std::vector<std::string> subgroups;
    std::string out_dir = "results";
    SweepKind sweep = SweepKind::None;
    std::vector<int> sweep_values;
    std::vector<DesignSpec> designs;

    void validate() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' needs a number, got '" + v + "'");
    }
}

inline long to_long(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' needs an integer, got '" + v + "'");
    }
}

inline Acquisition parse_acquisition(const std::string& v) {
    for (Acquisition a : {Acquisition::Uniform, Acquisition::MuPi, Acquisition::MuMax,
                          Acquisition::MuPiMax, Acquisition::MuPiUnf,
                          Acquisition::SignTauPi}) {
        if (acquisition_name(a) == v) return a;
    }
    throw ConfigError("config: unknown acquisition '" + v + "'");
}

inline TrialMode parse_mode(const std::string& v) {
    for (TrialMode m : {TrialMode::Rct, TrialMode::CausalBald, TrialMode::FixedSwitch,
                        TrialMode::EarlyStopping}) {
        if (trial_mode_name(m) == v) return m;
    }
    throw ConfigError("config: unknown mode '" + v + "'");
}

inline void apply_design_key(DesignSpec& d, const std::string& key,
                             const std::string& value) {
    TrialConfig& t = d.trial;
    if (key == "mode") {
        t.mode = parse_mode(value);
        if (t.mode == TrialMode::CausalBald) t.acquisition = Acquisition::MuMax;
    } else if (key == "T") {
        t.total_steps = static_cast<int>(to_long(value, key));
    } else if (key == "batch") {
        t.batch_size = static_cast<int>(to_long(value, key));
    } else if (key == "t_star") {
        t.t_star = static_cast<int>(to_long(value, key));
    } else if (key == "acquisition") {
        t.acquisition = parse_acquisition(value);
    } else if (key == "epsilon") {
        t.epsilon = to_double(value, key);
    } else if (key == "train_val_ratio") {
        t.train_val_ratio = to_double(value, key);
    } else if (key == "sign_bald_draws") {
        t.sign_bald_draws = static_cast<int>(to_long(value, key));
    } else if (key == "fractions") {
        t.schedule.information_fractions.clear();
        for (const std::string& f : split_list(value)) {
            t.schedule.information_fractions.push_back(to_double(f, key));
        }
    } else {
        throw ConfigError("config: unknown design key '" + key + "' in [design " +
                          d.label + "]");
    }
}

} // namespace detail

inline void ExperimentSpec::validate() const {
    if (dataset == DatasetKind::Csv && csv_path.empty()) {
        throw ConfigError("config: dataset = csv requires csv_path");
    }
    if (dataset == DatasetKind::Csv && subgroups.empty()) {
        throw ConfigError("config: dataset = csv requires a subgroups list");
    }
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
        throw ConfigError("config: split_fraction outside (0,1)");
    }
    if (n_pool < 1 || n_test < 1) {
        throw ConfigError("config: n_pool and n_test must be >= 1");
    }
    if (n_seeds < 1) throw ConfigError("config: n_seeds must be >= 1");
    if (designs.empty()) throw ConfigError("config: no [design ...] sections");
    std::set<std::string> labels;
    for (const DesignSpec& d : designs) {
        if (!labels.insert(d.label).second) {
            throw ConfigError("config: duplicate design label '" + d.label + "'");
        }
        TrialConfig t = d.trial;
        if (sweep == SweepKind::TStar && t.mode != TrialMode::FixedSwitch) {
            throw ConfigError("config: sweep over t_star requires mode = fixed in '" +
                              d.label + "'");
        }
        if (sweep == SweepKind::None) {
            t.validate();
        } else {
            if (sweep_values.empty()) {
                throw ConfigError("config: sweep declared without sweep_values");
            }
            for (int v : sweep_values) {
                TrialConfig s = t;
                if (sweep == SweepKind::N) {
                    if (v < 1 || v % s.batch_size != 0) {
                        throw ConfigError("config: sweep N value " + std::to_string(v) +
                                          " not divisible by batch in '" + d.label + "'");
                    }
                    s.total_steps = v / s.batch_size;
                } else {
                    s.t_star = v;
                }
                try {
                    s.validate();
                } catch (const ConfigError& e) {
                    throw ConfigError("config: design '" + d.label + "' at sweep value " +
                                      std::to_string(v) + ": " + e.what());
                }
            }
        }
    }
}

inline ExperimentSpec parse_experiment(std::istream& in) {
    ExperimentSpec spec;
    DesignSpec* current = nullptr;
    std::string raw;
    int line_no = 0;
    bool subgroups_set = false;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config: malformed section at line " +
                                  std::to_string(line_no));
            }
            std::string inner = detail::trim(line.substr(1, line.size() - 2));
            if (inner.rfind("design ", 0) != 0) {
                throw ConfigError("config: unknown section '" + inner + "' at line " +
                                  std::to_string(line_no));
            }
            DesignSpec d;
            d.label = detail::trim(inner.substr(7));
            if (d.label.empty()) {
                throw ConfigError("config: design section needs a label at line " +
                                  std::to_string(line_no));
            }
            spec.designs.push_back(std::move(d));
            current = &spec.designs.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: expected key = value at line " +
                              std::to_string(line_no));
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (current != nullptr) {
            detail::apply_design_key(*current, key, value);
            continue;
        }
        if (key == "dataset") {
            if (value == "synthetic") {
                spec.dataset = DatasetKind::Synthetic;
            } else if (value == "csv") {
                spec.dataset = DatasetKind::Csv;
            } else {
                throw ConfigError("config: dataset must be synthetic or csv");
            }
        } else if (key == "csv_path") {
            spec.csv_path = value;
        } else if (key == "split_fraction") {
            spec.split_fraction = detail::to_double(value, key);
        } else if (key == "n_pool") {
            spec.n_pool = static_cast<int>(detail::to_long(value, key));
        } else if (key == "n_test") {
            spec.n_test = static_cast<int>(detail::to_long(value, key));
        } else if (key == "n_seeds") {
            spec.n_seeds = static_cast<int>(detail::to_long(value, key));
        } else if (key == "base_seed") {
            spec.base_seed = detail::to_long(value, key);
        } else if (key == "subgroups") {
            spec.subgroups = detail::split_list(value);
            subgroups_set = true;
        } else if (key == "out") {
            spec.out_dir = value;
        } else if (key == "sweep") {
            if (value == "N") {
                spec.sweep = SweepKind::N;
            } else if (value == "t_star") {
                spec.sweep = SweepKind::TStar;
            } else {
                throw ConfigError("config: sweep must be N or t_star");
            }
        } else if (key == "sweep_values") {
            spec.sweep_values.clear();
            for (const std::string& v : detail::split_list(value)) {
                spec.sweep_values.push_back(static_cast<int>(detail::to_long(v, key)));
            }
        } else {
            throw ConfigError("config: unknown key '" + key + "' at line " +
                              std::to_string(line_no));
        }
    }
    if (!subgroups_set && spec.dataset == DatasetKind::Synthetic) {
        spec.subgroups = synthetic_subgroups();
    }
    // Each design's interim schedule runs at the design's own epsilon.
    for (DesignSpec& d : spec.designs) {
        d.trial.schedule.overall_epsilon = d.trial.epsilon;
        d.trial.seed = spec.base_seed;
    }
    spec.validate();
    return spec;
}

inline ExperimentSpec parse_experiment_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    return parse_experiment(in);
}

} // namespace rfan
