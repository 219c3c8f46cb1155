// Acceptance checks: one PASS/FAIL/SKIP line per criterion, nonzero exit on any FAIL.
#include "ssreid/cli.hpp"
#include "ssreid/data.hpp"
#include "ssreid/eigensolve.hpp"
#include "ssreid/eval.hpp"
#include "ssreid/experiment.hpp"
#include "ssreid/graph.hpp"
#include "ssreid/io.hpp"
#include "ssreid/kernels.hpp"
#include "ssreid/learner.hpp"
#include "ssreid/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace ssreid;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    enum Status { pass, fail, skip } status;
    std::string detail;
};

int failures = 0;

void report(const char* id, const char* name, const std::function<Outcome()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::fail ? "FAIL" : "SKIP";
    if (o.status == Outcome::fail) ++failures;
    std::printf("%s  %s  %-34s %s [%.2fs]\n", tag, id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char b[128];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

Outcome verdict(bool ok, const std::string& detail) { return {ok ? Outcome::pass : Outcome::fail, detail}; }

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix random_matrix(std::mt19937_64& rng, Index r, Index c) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
    return m;
}

Outcome trace_pairwise() {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> size(2, 30);
    std::bernoulli_distribution coin(0.4);
    double worst = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int inst = 0; inst < 100; ++inst) {
        const int d = size(rng), m = size(rng), r = std::uniform_int_distribution<int>(1, d)(rng);
        const Matrix X = random_matrix(rng, d, m);
        const Matrix U = random_matrix(rng, d, r);
        WeightMatrix W{Matrix::Zero(m, m), WeightRole::pseudo};
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j)
                if (coin(rng)) W.W(i, j) = W.W(j, i) = 1.0;
        const auto lp = laplacian(W);
        const double tr = (U.transpose() * X * lp.L * X.transpose() * U).trace();
        double pair = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (W.W(i, j) != 0.0) pair += 0.5 * (U.transpose() * (X.col(i) - X.col(j))).squaredNorm();
        const double rel = std::abs(tr - pair) / std::max(std::abs(pair), 1e-300);
        if (pair != 0.0 || tr != 0.0) worst = std::max(worst, rel);
    }
    const double secs = elapsed(t0);
    return verdict(worst <= 1e-8 && secs < 1.0, "max rel err " + fmt("%.2e", worst) + ", " + fmt("%.3f s", secs));
}

Outcome eigensolver() {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> size(1, 50);
    double worst_res = 0.0, worst_orth = 0.0, worst_val = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int inst = 0; inst < 100; ++inst) {
        const int m = size(rng);
        const Matrix Ga = random_matrix(rng, m, m), Gb = random_matrix(rng, m, m);
        const Matrix A = symmetrize(Ga * Ga.transpose() + 0.1 * Matrix::Identity(m, m));
        const Matrix B = symmetrize(Gb * Gb.transpose() + 0.1 * Matrix::Identity(m, m));
        const double theta = inst % 2 ? 0.01 : 0.0;
        const EigenPairs ep = smallest_eigenvectors({A, B, theta}, m);
        const Matrix Bp = regularize(B, theta, m);
        for (int j = 0; j < m; ++j) {
            const Vector v = ep.vectors.col(j);
            const Vector Av = A * v, Bv = Bp * v;
            worst_res = std::max(worst_res, (Av - ep.values(j) * Bv).norm() / std::max(Av.norm(), Bv.norm()));
        }
        worst_orth = std::max(worst_orth,
                              (ep.vectors.transpose() * Bp * ep.vectors - Matrix::Identity(m, m)).cwiseAbs().maxCoeff());
        // Oracle: eigenvalues of B'^{-1/2} A B'^{-1/2} through a spectral square root of B'.
        Eigen::SelfAdjointEigenSolver<Matrix> eb(Bp);
        const Matrix Bih = eb.eigenvectors() * eb.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                           eb.eigenvectors().transpose();
        Eigen::SelfAdjointEigenSolver<Matrix> eo(symmetrize(Bih * A * Bih), Eigen::EigenvaluesOnly);
        for (int j = 0; j < m; ++j)
            worst_val = std::max(worst_val, std::abs(ep.values(j) - eo.eigenvalues()(j)) /
                                                std::max(std::abs(eo.eigenvalues()(j)), 1e-300));
        for (int j = 1; j < m; ++j)
            if (ep.values(j) < ep.values(j - 1)) return verdict(false, "eigenvalues not ascending");
    }
    const double secs = elapsed(t0);
    const bool ok = worst_res <= 1e-6 && worst_orth <= 1e-8 && worst_val <= 1e-8 && secs < 5.0;
    return verdict(ok, "residual " + fmt("%.1e", worst_res) + ", orth " + fmt("%.1e", worst_orth) + ", eig rel " +
                           fmt("%.1e", worst_val) + ", " + fmt("%.2f s", secs));
}

Outcome alignment() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(13);
    const std::vector<PersonId> ids{1, 1, 2, 2, 3, 3, 4};
    const Matrix Kd = ideal_kernel(ids);
    const double self = alignment_score(Kd, Kd);

    const Matrix X = random_matrix(rng, 6, 10);
    KernelBank bank = build_bank(X, default_bandwidths());
    const std::vector<Index> labeled{0, 1, 2, 3, 4, 5, 6};
    const Vector beta = kernel_weights(bank, Kd, labeled);
    const double sum_err = std::abs(beta.sum() - 1.0);
    const bool positive = (beta.array() > 0).all();

    // Replace one member with a kernel whose labeled block is exactly Kd.
    Matrix ideal = bank.kernels[4];
    for (std::size_t i = 0; i < labeled.size(); ++i)
        for (std::size_t j = 0; j < labeled.size(); ++j) ideal(labeled[i], labeled[j]) = Kd(Index(i), Index(j));
    bank.kernels[4] = ideal;
    const Vector beta2 = kernel_weights(bank, Kd, labeled);
    Index arg = 0;
    beta2.maxCoeff(&arg);
    const double secs = elapsed(t0);
    const bool ok = std::abs(self - 1.0) <= 1e-12 && sum_err <= 1e-12 && positive && arg == 4 &&
                    std::abs(beta2.sum() - 1.0) <= 1e-12 && secs < 1.0;
    return verdict(ok, "A(Kd,Kd)=" + fmt("%.15f", self) + ", |sum-1|=" + fmt("%.1e", sum_err) +
                           ", ideal member weight rank " + std::to_string(arg == 4 ? 1 : 0) + "/11");
}

Outcome linear_kernel_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(14);
    const int d = 5;
    const Matrix X = random_matrix(rng, d, 8);
    const std::vector<PersonId> ids{0, 0, 1, 1, 2, 2, 3, 3};
    const Matrix probes = random_matrix(rng, d, 6), gallery = random_matrix(rng, d, 7);

    const Projection lin = fit_supervised_linear(X, ids, std::nullopt, 0.01);
    TrainOptions o;
    o.theta = 1e-12;
    o.supervised_only = true;
    KernelSpec spec;
    spec.family = KernelFamily::linear;
    std::vector<std::optional<PersonId>> oid(ids.begin(), ids.end());
    const TrainState ks = fit_kernelized(X, oid, {0, 1, 0, 1, 0, 1, 0, 1}, {0, 1, 2, 3, 4, 5, 6, 7}, o, spec);
    const Matrix Dl = distances(lin, probes, gallery);
    const Matrix Dk = distances(ks.projection, probes, gallery);
    const double rel = (Dl - Dk).cwiseAbs().maxCoeff() / Dl.cwiseAbs().maxCoeff();
    const double secs = elapsed(t0);
    return verdict(rel <= 1e-6 && secs < 1.0, "max rel diff " + fmt("%.2e", rel));
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Outcome degenerate_equalities(const fs::path& work) {
    std::mt19937_64 rng(15);
    const Matrix X_l = random_matrix(rng, 6, 10);
    const std::vector<PersonId> ids{0, 0, 1, 1, 2, 2, 3, 3, 4, 4};
    const Matrix X_u = random_matrix(rng, 6, 8);
    const Projection sup = fit_supervised_linear(X_l, ids);
    const WeightMatrix Wu = knn_cross_view_weights(X_u, {0, 1, 0, 1, 0, 1, 0, 1}, 2);
    const Projection eta0 = fit_semi_supervised_linear(X_l, ids, X_u, Wu, 0.0);
    const Projection empty = fit_semi_supervised_linear(X_l, ids, X_u, WeightMatrix{Matrix::Zero(8, 8), WeightRole::pseudo}, 1.0);
    const bool lin_ok = sup.basis == eta0.basis && sup.basis == empty.basis;

    // ratio = 1: every training person labeled, so both kernel methods must write the same bytes.
    FeatureSet data = generate_synthetic_crossview(30, 1, 4, 0.3, 5);
    for (auto& t : data.split) t = SplitTag::labeled;
    fs::create_directories(work);
    save_feature_set(data, work / "all_labeled.bin", FeatureFormat::binary);
    std::ostringstream out, err;
    const auto f = (work / "all_labeled.bin").string();
    const int a = run_cli({"train", "--features", f, "--method", "mkfsl", "--out", (work / "fsl.sspj").string()}, out, err);
    const int b = run_cli({"train", "--features", f, "--method", "mkssl", "--out", (work / "ssl.sspj").string()}, out, err);
    const bool train_ok = a == 0 && b == 0 && slurp(work / "fsl.sspj") == slurp(work / "ssl.sspj");

    const int c = run_cli({"experiment", "--synthetic", "persons=40", "ratio=1", "trials=3", "--method", "mkfsl,mkssl",
                           "--out", (work / "exp_ratio1").string()},
                          out, err);
    const bool exp_ok = c == 0 && slurp(work / "exp_ratio1" / "cmc_mkfsl.csv") == slurp(work / "exp_ratio1" / "cmc_mkssl.csv");
    return verdict(lin_ok && train_ok && exp_ok, std::string("eta=0/empty graph ") + (lin_ok ? "identical" : "DIFFER") +
                                                     ", ratio=1 projection bytes " + (train_ok ? "identical" : "DIFFER") +
                                                     ", ratio=1 CMC bytes " + (exp_ok ? "identical" : "DIFFER"));
}

struct SeedRun {
    double fsl = 0, ssl = 0, ssl_first = 0;
    int iterations = 0;
    bool converged = false;
};

// One fresh synthetic dataset and one random split per seed.
std::vector<SeedRun> self_training_runs(const Ratio& ratio) {
    std::vector<SeedRun> runs;
    for (int s = 0; s < 20; ++s) {
        const FeatureSet data = generate_synthetic_crossview(100, 1, 8, 0.3, static_cast<std::uint64_t>(s));
        ExperimentConfig cfg;
        cfg.ratio = ratio;
        cfg.trials = 1;
        cfg.rng_seed = static_cast<std::uint64_t>(s);
        cfg.methods = {Method::mkfsl, Method::mkssl};
        const ExperimentReport rep = run_experiment(data, cfg);
        const TrialResult& t = rep.trials.front();
        if (!t.ok) throw std::runtime_error("seed " + std::to_string(s) + ": " + t.error);
        const MethodResult& ssl = t.methods.at(Method::mkssl);
        SeedRun r;
        r.fsl = t.methods.at(Method::mkfsl).curve.at(1);
        r.ssl = ssl.curve.at(1);
        r.ssl_first = ssl.history.empty() ? r.ssl : ssl.history.front().rank1;
        r.iterations = static_cast<int>(ssl.history.size());
        r.converged = ssl.converged;
        runs.push_back(r);
    }
    return runs;
}

struct RatioSummary {
    double fsl = 0, ssl = 0, ssl_first = 0, median_iters = 0;
    int converged = 0;
};

RatioSummary summarize(const std::vector<SeedRun>& runs) {
    RatioSummary s;
    std::vector<int> its;
    for (const auto& r : runs) {
        s.fsl += r.fsl / runs.size();
        s.ssl += r.ssl / runs.size();
        s.ssl_first += r.ssl_first / runs.size();
        s.converged += r.converged ? 1 : 0;
        its.push_back(r.iterations);
    }
    std::sort(its.begin(), its.end());
    s.median_iters = 0.5 * (its[its.size() / 2 - 1] + its[its.size() / 2]);
    return s;
}

Outcome cmc_properties() {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int G = 50, P = 200;
    // Monotone and terminal value on a random instance with full matches.
    Matrix D(P, G);
    IdList pid, gid;
    for (int j = 0; j < G; ++j) gid.emplace_back(j);
    for (int i = 0; i < P; ++i) pid.emplace_back(i % G);
    for (int i = 0; i < P; ++i)
        for (int j = 0; j < G; ++j) D(i, j) = unif(rng);
    const CmcCurve c = cmc(D, pid, gid);
    bool mono = true;
    for (std::size_t r = 1; r < c.rates.size(); ++r) mono = mono && c.rates[r] >= c.rates[r - 1];
    const bool terminal = c.rates.back() == 1.0;
    const double p = 1.0 / G, sigma = std::sqrt(p * (1 - p) / P);
    const double r1 = c.at(1);
    const bool chance = std::abs(r1 - p) <= 3 * sigma;
    return verdict(mono && terminal && chance, std::string(mono ? "monotone" : "NOT monotone") + ", terminal " +
                                                   fmt("%.3f", c.rates.back()) + ", rank-1 " + fmt("%.4f", r1) +
                                                   " vs 1/G=" + fmt("%.4f", p) + " +- " + fmt("%.4f", 3 * sigma));
}

Outcome rerank_sanity() {
    std::mt19937_64 rng(17);
    const Matrix Xg = random_matrix(rng, 4, 30), Xp = random_matrix(rng, 4, 12);
    const Matrix Dpg = squared_distances(Xp, Xg), Dgg = squared_distances(Xg, Xg);
    const RankingResult base = rank_by_distance(Dpg);
    const RankingResult rr = manifold_rerank(Dpg, Dgg, 1e-12, 10);
    const bool same = base.order == rr.order;

    // Two clusters on a line: a chain 0, 0.2, ..., 1.8 holding the true match at 0.4, and a
    // second cluster at -1.2, -2.0. The probe at -0.5 is closer to -1.2 than to the true match.
    Matrix g(1, 12);
    for (int i = 0; i < 10; ++i) g(0, i) = 0.2 * i;
    g(0, 10) = -1.2;
    g(0, 11) = -2.0;
    Matrix p(1, 1);
    p(0, 0) = -0.5;
    const Matrix Dp = squared_distances(p, g), Dg = squared_distances(g, g);
    auto rank_of = [](const RankingResult& r, Index target) {
        const auto& o = r.order.front();
        return static_cast<int>(std::find(o.begin(), o.end(), target) - o.begin()) + 1;
    };
    const int before = rank_of(rank_by_distance(Dp), 2);
    const int after = rank_of(manifold_rerank(Dp, Dg, 0.95, 3), 2);
    return verdict(same && after < before, std::string("alpha->0 ") + (same ? "matches baseline" : "DIFFERS") +
                                               ", true match rank " + std::to_string(before) + " -> " +
                                               std::to_string(after));
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / ("ssreid_acceptance_" + std::to_string(::getpid()));

    report("C01", "trace-pairwise identity", trace_pairwise);
    report("C02", "generalized eigensolver", eigensolver);
    report("C03", "kernel alignment weights", alignment);
    report("C04", "linear-kernel equivalence", linear_kernel_equivalence);
    report("C05", "degenerate equalities", [&] { return degenerate_equalities(work); });

    std::vector<RatioSummary> sums;
    const std::vector<Ratio> ratios{{1, 7}, {1, 5}, {1, 3}};
    std::string err;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        for (const auto& r : ratios) sums.push_back(summarize(self_training_runs(r)));
    } catch (const std::exception& e) {
        err = e.what();
    }
    const double secs = elapsed(t0);

    report("C06", "self-training benefit", [&] {
        if (!err.empty()) return Outcome{Outcome::fail, err};
        std::string detail;
        bool ok = secs < 120.0;
        double prev_gap = 1e300;
        for (std::size_t i = 0; i < ratios.size(); ++i) {
            const double gap = sums[i].ssl - sums[i].fsl;
            ok = ok && gap > 0 && gap <= prev_gap;
            prev_gap = gap;
            detail += ratios[i].str() + ": mkfsl " + fmt("%.3f", sums[i].fsl) + " mkssl " + fmt("%.3f", sums[i].ssl) +
                      " gap " + fmt("%+.3f", gap) + "; ";
        }
        return verdict(ok, detail + fmt("%.1f s", secs));
    });
    report("C07", "self-training convergence", [&] {
        if (!err.empty()) return Outcome{Outcome::fail, err};
        const auto& s = sums[2];
        return verdict(s.converged >= 16 && s.median_iters <= 6,
                       std::to_string(s.converged) + "/20 stable within 10 iterations, median " +
                           fmt("%.1f", s.median_iters) + " iterations");
    });
    report("C08", "CMC properties", cmc_properties);
    report("C09", "iterative refinement", [&] {
        if (!err.empty()) return Outcome{Outcome::fail, err};
        const auto& s = sums[2];
        return verdict(s.ssl >= s.ssl_first,
                       "ratio 1/3: final " + fmt("%.4f", s.ssl) + " vs after iteration 1 " + fmt("%.4f", s.ssl_first));
    });
    report("C10", "manifold re-rank sanity", rerank_sanity);
    report("C11", "VIPeR GOG rank-1 (data provided)", [&] {
        const char* path = std::getenv("SSREID_VIPER_FEATURES");
        if (!path || !*path) return Outcome{Outcome::skip, "set SSREID_VIPER_FEATURES to a VIPeR GOG feature file"};
        const FeatureSet data = load_feature_set(path);
        ExperimentConfig cfg;
        cfg.ratio = {1, 3};
        cfg.methods = {Method::mkssl};
        const auto tr0 = std::chrono::steady_clock::now();
        const ExperimentReport rep = run_experiment(data, cfg);
        const double per_trial = elapsed(tr0) / cfg.trials;
        const double r1 = 100 * rep.mean(Method::mkssl).at(1);
        return verdict(std::abs(r1 - 40.6) <= 2.0,
                       "rank-1 " + fmt("%.2f", r1) + "% (target 40.6 +- 2), " + fmt("%.2f s per trial", per_trial));
    });

    std::error_code ec;
    fs::remove_all(work, ec);
    return failures == 0 ? 0 : 1;
}
