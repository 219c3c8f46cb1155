#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ssreid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using PersonId = std::int64_t;

enum class SplitTag : std::uint8_t { labeled = 0, unlabeled = 1, probe = 2, gallery = 3 };

const char* to_string(SplitTag tag);
SplitTag parse_split_tag(const std::string& text);

// Column-per-sample feature matrix with per-column metadata.
struct FeatureSet {
    Matrix features;  // d x N
    std::vector<std::optional<PersonId>> person_id;
    std::vector<int> view_id;
    std::vector<SplitTag> split;

    Index dim() const { return features.rows(); }
    Index size() const { return features.cols(); }

    // Throws shape/invariant errors when metadata and matrix disagree.
    void validate() const;
    FeatureSet select(const std::vector<Index>& columns) const;
    std::vector<Index> indices_with(SplitTag tag) const;
    std::vector<int> distinct_views() const;
    std::vector<PersonId> distinct_persons() const;
};

// A rational in (0, 1], parsed from "1/3" or a decimal such as "0.5".
struct Ratio {
    std::int64_t num = 1;
    std::int64_t den = 1;

    static Ratio parse(const std::string& text);
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    // floor(ratio * persons), at least 1.
    std::size_t labeled_count(std::size_t persons) const;
    std::string str() const;
};

struct LabeledPartition {
    std::vector<Index> labeled_indices;
    std::vector<Index> unlabeled_indices;
    Ratio ratio;
};

enum class ProjectionKind : std::uint8_t { linear = 0, kernelized = 1 };
enum class KernelFamily : std::uint8_t { gaussian = 0, linear = 1 };

// Everything needed to evaluate the fused kernel between training samples and new ones.
struct KernelContext {
    Matrix train_features;  // d x (n+u)
    KernelFamily family = KernelFamily::gaussian;
    std::vector<double> bandwidths;
    Vector beta;
    double mu = 1.0;
};

struct Projection {
    ProjectionKind kind = ProjectionKind::linear;
    Matrix basis;  // d x r (linear) or (n+u) x r (kernelized)
    std::optional<KernelContext> context;

    Index subspace_dim() const { return basis.cols(); }
    Index input_dim() const;
    // Maps the columns of X into the learned subspace (r x N).
    Matrix embed(const Matrix& X) const;
};

enum class Method { fsl, ssl, mkfsl, mkssl, mkssl_mrank };
enum class MatchMode { single_shot, multi_shot };
enum class SplitMode { halves, single_gallery };

const char* to_string(Method m);
Method parse_method(const std::string& text);
const char* to_string(MatchMode m);
const char* to_string(SplitMode m);

std::vector<double> default_bandwidths();

struct ExperimentConfig {
    double eta = 1.0;
    int k_neighbors = 2;
    int max_iters = 10;
    double theta = 0.01;
    std::vector<double> c_grid = default_bandwidths();
    Ratio ratio{1, 3};
    int trials = 10;
    std::uint64_t rng_seed = 0;
    double stop_tolerance = 0.0;
    std::optional<int> subspace_dim;
    std::vector<Method> methods{Method::mkssl};
    double rerank_alpha = 0.95;
    int rerank_k = 10;
    MatchMode match_mode = MatchMode::single_shot;
    SplitMode split_mode = SplitMode::halves;

    void validate() const;
};

}  // namespace ssreid
