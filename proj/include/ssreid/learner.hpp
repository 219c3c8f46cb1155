#pragma once

#include "ssreid/graph.hpp"
#include "ssreid/kernels.hpp"
#include "ssreid/types.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ssreid {

struct ObjectiveTerms {
    double labeled_term = 0.0;
    double unlabeled_term = 0.0;
    double eta = 1.0;

    double total() const { return labeled_term + eta * unlabeled_term; }
};

struct IterationRecord {
    int iteration = 0;
    std::size_t edges = 0;
    std::size_t edges_changed = 0;
    ObjectiveTerms objective;
};

// "iter=<t> edges_changed=<n> objective=<v>"
std::string format_log_line(const IterationRecord& rec);

struct TrainState {
    Projection projection;
    WeightMatrix current_Wu{Matrix(), WeightRole::pseudo};
    int iteration = 0;
    std::vector<IterationRecord> history;
    bool converged = false;
    bool failed = false;
    std::string message;
};

// Called after every self-training refit with the new projection.
using IterationObserver = std::function<void(const IterationRecord&, const Projection&)>;

struct TrainOptions {
    double eta = 1.0;
    int k_neighbors = 2;
    int max_iters = 10;
    double theta = 0.01;
    double stop_tolerance = 0.0;
    std::optional<int> subspace_dim;
    // Stop after the supervised solution (no self-training).
    bool supervised_only = false;
    IterationObserver observer;
    // Receives formatted log lines and warnings.
    std::function<void(const std::string&)> log;

    static TrainOptions from(const ExperimentConfig& cfg);
};

ObjectiveTerms objective(const Matrix& X_l, const Matrix& X_u, const Matrix& U,
                         const WeightMatrix& Wl, const WeightMatrix& Wu, double eta);

Projection fit_supervised_linear(const Matrix& X_l, const std::vector<PersonId>& ids,
                                 std::optional<int> r = std::nullopt, double theta = 0.01);

Projection fit_semi_supervised_linear(const Matrix& X_l, const std::vector<PersonId>& ids,
                                      const Matrix& X_u, const WeightMatrix& Wu, double eta,
                                      std::optional<int> r = std::nullopt, double theta = 0.01);

TrainState self_train(const Matrix& X_l, const std::vector<PersonId>& ids, const Matrix& X_u,
                      const std::vector<int>& views_u, const TrainOptions& options);

struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    std::vector<double> c_grid = default_bandwidths();
    const KernelCache* cache = nullptr;
};

// Kernelized self-training over the columns of X. ids and views cover every column; ids of
// unlabeled columns are ignored.
TrainState fit_kernelized(const Matrix& X, const std::vector<std::optional<PersonId>>& ids,
                          const std::vector<int>& views, const std::vector<Index>& labeled,
                          const TrainOptions& options, const KernelSpec& spec = {});

// Leading eigen-directions of a PSD kernel kept by the kernelized solver: eigenvalues w with
// w^2 >= theta * ||K||_F^2 / m (and numerically positive), in descending order.
struct KernelSubspace {
    Matrix vectors;
    Vector values;
};
KernelSubspace kernel_subspace(const Matrix& K, double theta);

}  // namespace ssreid
