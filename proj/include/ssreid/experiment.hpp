#pragma once

#include "ssreid/learner.hpp"
#include "ssreid/eval.hpp"
#include "ssreid/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ssreid {

struct HistoryRow {
    int iteration = 0;
    std::size_t edges_changed = 0;
    double objective = 0.0;
    double rank1 = 0.0;
};

struct MethodResult {
    CmcCurve curve;
    std::vector<HistoryRow> history;
    bool converged = false;
    double train_seconds = 0.0;
};

struct TrialResult {
    int trial = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    std::map<Method, MethodResult> methods;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<TrialResult> trials;

    std::vector<std::uint64_t> seeds() const;
    // Mean over successful trials.
    CmcCurve mean(Method m) const;
};

std::uint64_t trial_seed(std::uint64_t master, int trial);

ExperimentReport run_experiment(const FeatureSet& fs, const ExperimentConfig& config, int jobs = 1);

// Writes cmc_<method>.csv, history.csv and summary.txt into dir; returns the paths.
std::vector<std::filesystem::path> write_report(const ExperimentReport& report,
                                                const std::filesystem::path& dir);
std::string summary_table(const ExperimentReport& report);

}  // namespace ssreid
