#pragma once

#include "ssreid/types.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace ssreid {

// Mean squared Euclidean distance over ordered pairs i != j; 0 for a single column.
double mean_squared_distance(const Matrix& X);

// exp(-||x_i - x_j||^2 / (c mu)) with mu taken from X. Throws degenerate when N >= 2 and mu = 0.
Matrix gaussian_kernel(const Matrix& X, double c);
// Same with an explicit mu (mu = 0 is allowed only when every distance is 0).
Matrix gaussian_kernel(const Matrix& X, double c, double mu);
Matrix gaussian_kernel(const Matrix& X, const Matrix& Y, double c, double mu);

class KernelCache;

struct KernelBank {
    std::vector<Matrix> kernels;
    std::vector<double> bandwidths;
    double mu = 1.0;
    KernelFamily family = KernelFamily::gaussian;

    std::size_t size() const { return kernels.size(); }
};

KernelBank build_bank(const Matrix& X, const std::vector<double>& c_grid,
                      const KernelCache* cache = nullptr);
// A single linear kernel X^T X.
KernelBank linear_bank(const Matrix& X);

Matrix ideal_kernel(const std::vector<PersonId>& ids);
double alignment_score(const Matrix& K, const Matrix& Kd);
Vector kernel_weights(const KernelBank& bank, const Matrix& Kd, const std::vector<Index>& labeled);

struct FusedKernel {
    Matrix K;
    Vector beta;
    std::vector<Index> labeled;
    std::vector<Index> unlabeled;

    Matrix block(const std::vector<Index>& rows, const std::vector<Index>& cols) const;
    Matrix ll() const { return block(labeled, labeled); }
    Matrix lu() const { return block(labeled, unlabeled); }
    Matrix ul() const { return block(unlabeled, labeled); }
    Matrix uu() const { return block(unlabeled, unlabeled); }
    // All training rows against the labeled (resp. unlabeled) columns.
    Matrix stacked_labeled() const;
    Matrix stacked_unlabeled() const;
};

FusedKernel fuse(const KernelBank& bank, const Vector& beta, const std::vector<Index>& labeled);

// Fused kernel between the training samples of ctx and the columns of Z: (n+u) x N.
Matrix kernel_columns(const KernelContext& ctx, const Matrix& Z);

// On-disk cache of Gaussian kernel matrices keyed by data hash, c and mu.
class KernelCache {
public:
    explicit KernelCache(std::filesystem::path dir);
    // Reads SSREID_CACHE_DIR; empty when unset.
    static std::optional<KernelCache> from_environment();

    std::optional<Matrix> load(std::uint64_t data_hash, double c, double mu) const;
    void store(std::uint64_t data_hash, double c, double mu, const Matrix& K) const;
    std::filesystem::path path_for(std::uint64_t data_hash, double c, double mu) const;

private:
    std::filesystem::path dir_;
};

}  // namespace ssreid
