#include "ssreid/kernels.hpp"

#include "ssreid/error.hpp"
#include "ssreid/io.hpp"
#include "ssreid/linalg.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>

namespace ssreid {

double mean_squared_distance(const Matrix& X) {
    const Index n = X.cols();
    if (n < 2) return 0.0;
    // Self pairs contribute zero, so the full sum over ordered pairs is divided by n(n-1).
    return squared_distances(X, X).sum() / (static_cast<double>(n) * static_cast<double>(n - 1));
}

namespace {

Matrix gaussian_from_distances(const Matrix& D, double c, double mu) {
    if (!(c > 0)) throw Error(ErrorKind::domain, "kernel bandwidth multiplier must be positive");
    if (mu < 0) throw Error(ErrorKind::domain, "mean squared distance must be nonnegative");
    if (mu == 0.0) {
        if ((D.array() != 0.0).any())
            throw Error(ErrorKind::degenerate, "zero mean squared distance with distinct samples");
        return Matrix::Ones(D.rows(), D.cols());
    }
    return (-D.array() / (c * mu)).exp().matrix();
}

}  // namespace

Matrix gaussian_kernel(const Matrix& X, double c) {
    if (X.cols() < 1) throw Error(ErrorKind::shape, "empty sample matrix");
    if (X.cols() == 1) {
        if (!(c > 0)) throw Error(ErrorKind::domain, "kernel bandwidth multiplier must be positive");
        return Matrix::Ones(1, 1);
    }
    const double mu = mean_squared_distance(X);
    if (mu == 0.0) throw Error(ErrorKind::degenerate, "all samples are identical (mean squared distance is 0)");
    return gaussian_kernel(X, c, mu);
}

Matrix gaussian_kernel(const Matrix& X, double c, double mu) {
    if (X.cols() < 1) throw Error(ErrorKind::shape, "empty sample matrix");
    Matrix K = gaussian_from_distances(squared_distances(X, X), c, mu);
    K.diagonal().setOnes();
    return symmetrize(K);
}

Matrix gaussian_kernel(const Matrix& X, const Matrix& Y, double c, double mu) {
    return gaussian_from_distances(squared_distances(X, Y), c, mu);
}

KernelBank build_bank(const Matrix& X, const std::vector<double>& c_grid, const KernelCache* cache) {
    if (c_grid.empty()) throw Error(ErrorKind::parameter, "empty bandwidth grid");
    if (X.cols() < 1) throw Error(ErrorKind::shape, "empty sample matrix");
    KernelBank bank;
    bank.family = KernelFamily::gaussian;
    bank.bandwidths = c_grid;
    const Matrix D = squared_distances(X, X);
    const Index n = X.cols();
    bank.mu = n < 2 ? 1.0 : D.sum() / (static_cast<double>(n) * static_cast<double>(n - 1));
    if (n >= 2 && bank.mu == 0.0)
        throw Error(ErrorKind::degenerate, "all samples are identical (mean squared distance is 0)");
    const std::uint64_t h = cache ? matrix_hash(X) : 0;
    for (double c : c_grid) {
        if (cache) {
            if (auto K = cache->load(h, c, bank.mu); K && K->rows() == n && K->cols() == n) {
                bank.kernels.push_back(std::move(*K));
                continue;
            }
        }
        Matrix K = gaussian_from_distances(D, c, bank.mu);
        K.diagonal().setOnes();
        K = symmetrize(K);
        if (cache) cache->store(h, c, bank.mu, K);
        bank.kernels.push_back(std::move(K));
    }
    return bank;
}

KernelBank linear_bank(const Matrix& X) {
    KernelBank bank;
    bank.family = KernelFamily::linear;
    bank.bandwidths = {1.0};
    bank.mu = 1.0;
    bank.kernels.push_back(symmetrize(X.transpose() * X));
    return bank;
}

Matrix ideal_kernel(const std::vector<PersonId>& ids) {
    const auto n = static_cast<Index>(ids.size());
    Matrix K = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (ids[static_cast<std::size_t>(i)] == ids[static_cast<std::size_t>(j)]) K(i, j) = 1.0;
    return K;
}

double alignment_score(const Matrix& K, const Matrix& Kd) {
    if (K.rows() != Kd.rows() || K.cols() != Kd.cols())
        throw Error(ErrorKind::shape, "alignment of matrices with different shapes");
    const double nk = K.squaredNorm();
    const double nd = Kd.squaredNorm();
    if (nk == 0.0 || nd == 0.0) throw Error(ErrorKind::degenerate, "alignment with a zero-norm matrix");
    return (K.array() * Kd.array()).sum() / std::sqrt(nk * nd);
}

Vector kernel_weights(const KernelBank& bank, const Matrix& Kd, const std::vector<Index>& labeled) {
    if (bank.kernels.empty()) throw Error(ErrorKind::parameter, "empty kernel bank");
    const auto n = static_cast<Index>(labeled.size());
    if (Kd.rows() != n || Kd.cols() != n) throw Error(ErrorKind::shape, "ideal kernel does not match the labeled set");
    Vector a(static_cast<Index>(bank.size()));
    for (std::size_t m = 0; m < bank.size(); ++m) {
        const Matrix& K = bank.kernels[m];
        Matrix Kll(n, n);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) Kll(i, j) = K(labeled[static_cast<std::size_t>(i)], labeled[static_cast<std::size_t>(j)]);
        a(static_cast<Index>(m)) = alignment_score(Kll, Kd);
    }
    const double total = a.sum();
    if (!(total != 0.0) || !std::isfinite(total)) throw Error(ErrorKind::degenerate, "all kernel alignment scores are zero");
    Vector beta = a / total;
    if ((beta.array() <= 0).any()) throw Error(ErrorKind::degenerate, "kernel alignment produced a nonpositive weight");
    return beta;
}

Matrix FusedKernel::block(const std::vector<Index>& rows, const std::vector<Index>& cols) const {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Index>(i), static_cast<Index>(j)) = K(rows[i], cols[j]);
    return out;
}

Matrix FusedKernel::stacked_labeled() const { return K(Eigen::all, labeled); }
Matrix FusedKernel::stacked_unlabeled() const { return K(Eigen::all, unlabeled); }

FusedKernel fuse(const KernelBank& bank, const Vector& beta, const std::vector<Index>& labeled) {
    if (static_cast<std::size_t>(beta.size()) != bank.size() || bank.kernels.empty())
        throw Error(ErrorKind::shape, "weight vector does not match the kernel bank");
    const Index m = bank.kernels.front().rows();
    FusedKernel f;
    f.K = Matrix::Zero(m, m);
    for (std::size_t i = 0; i < bank.size(); ++i) {
        if (bank.kernels[i].rows() != m || bank.kernels[i].cols() != m)
            throw Error(ErrorKind::shape, "kernel bank members differ in size");
        f.K += beta(static_cast<Index>(i)) * bank.kernels[i];
    }
    f.beta = beta;
    f.labeled = labeled;
    std::vector<char> is_lab(static_cast<std::size_t>(m), 0);
    for (Index i : labeled) {
        if (i < 0 || i >= m) throw Error(ErrorKind::shape, "labeled index out of range");
        is_lab[static_cast<std::size_t>(i)] = 1;
    }
    for (Index i = 0; i < m; ++i)
        if (!is_lab[static_cast<std::size_t>(i)]) f.unlabeled.push_back(i);
    return f;
}

Matrix kernel_columns(const KernelContext& ctx, const Matrix& Z) {
    if (Z.rows() != ctx.train_features.rows())
        throw Error(ErrorKind::shape, "sample dimension does not match the kernel context");
    if (ctx.family == KernelFamily::linear) {
        const double w = ctx.beta.size() > 0 ? ctx.beta.sum() : 1.0;
        return w * (ctx.train_features.transpose() * Z);
    }
    if (static_cast<std::size_t>(ctx.beta.size()) != ctx.bandwidths.size())
        throw Error(ErrorKind::shape, "kernel context weights do not match its bandwidths");
    const Matrix D = squared_distances(ctx.train_features, Z);
    Matrix out = Matrix::Zero(D.rows(), D.cols());
    for (std::size_t m = 0; m < ctx.bandwidths.size(); ++m)
        out += ctx.beta(static_cast<Index>(m)) * gaussian_from_distances(D, ctx.bandwidths[m], ctx.mu);
    return out;
}

KernelCache::KernelCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<KernelCache> KernelCache::from_environment() {
    const char* dir = std::getenv("SSREID_CACHE_DIR");
    if (!dir || !*dir) return std::nullopt;
    return KernelCache(dir);
}

std::filesystem::path KernelCache::path_for(std::uint64_t data_hash, double c, double mu) const {
    return dir_ / ("k_" + hex64(data_hash) + "_" + hex64(std::bit_cast<std::uint64_t>(c)) + "_" +
                   hex64(std::bit_cast<std::uint64_t>(mu)) + ".ssmx");
}

std::optional<Matrix> KernelCache::load(std::uint64_t data_hash, double c, double mu) const {
    const auto p = path_for(data_hash, c, mu);
    if (!std::filesystem::exists(p)) return std::nullopt;
    try {
        return load_matrix(p);
    } catch (const Error&) {
        return std::nullopt;
    }
}

void KernelCache::store(std::uint64_t data_hash, double c, double mu, const Matrix& K) const {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    try {
        save_matrix(K, path_for(data_hash, c, mu));
    } catch (const Error&) {
        // A cache that cannot be written only costs recomputation.
    }
}

}  // namespace ssreid
