#include "ssreid/types.hpp"

#include "ssreid/error.hpp"
#include "ssreid/kernels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

namespace ssreid {

const char* to_string(SplitTag tag) {
    switch (tag) {
    case SplitTag::labeled: return "labeled";
    case SplitTag::unlabeled: return "unlabeled";
    case SplitTag::probe: return "probe";
    case SplitTag::gallery: return "gallery";
    }
    return "?";
}

SplitTag parse_split_tag(const std::string& text) {
    if (text == "labeled") return SplitTag::labeled;
    if (text == "unlabeled") return SplitTag::unlabeled;
    if (text == "probe") return SplitTag::probe;
    if (text == "gallery") return SplitTag::gallery;
    throw Error(ErrorKind::parse, "unknown split tag '" + text + "'");
}

void FeatureSet::validate() const {
    const auto n = static_cast<std::size_t>(features.cols());
    if (features.rows() < 1 || features.cols() < 1)
        throw Error(ErrorKind::shape, "feature set must have d >= 1 and N >= 1");
    if (person_id.size() != n || view_id.size() != n || split.size() != n)
        throw Error(ErrorKind::shape, "metadata length does not match the number of samples");
    for (std::size_t i = 0; i < n; ++i)
        if (split[i] == SplitTag::labeled && !person_id[i])
            throw Error(ErrorKind::invariant,
                        "labeled sample " + std::to_string(i) + " has no person id");
}

FeatureSet FeatureSet::select(const std::vector<Index>& columns) const {
    FeatureSet out;
    out.features.resize(features.rows(), static_cast<Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const Index c = columns[j];
        if (c < 0 || c >= size()) throw Error(ErrorKind::shape, "column index out of range");
        out.features.col(static_cast<Index>(j)) = features.col(c);
        out.person_id.push_back(person_id[c]);
        out.view_id.push_back(view_id[c]);
        out.split.push_back(split[c]);
    }
    return out;
}

std::vector<Index> FeatureSet::indices_with(SplitTag tag) const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == tag) out.push_back(static_cast<Index>(i));
    return out;
}

std::vector<int> FeatureSet::distinct_views() const {
    std::set<int> s(view_id.begin(), view_id.end());
    return {s.begin(), s.end()};
}

std::vector<PersonId> FeatureSet::distinct_persons() const {
    std::set<PersonId> s;
    for (const auto& id : person_id)
        if (id) s.insert(*id);
    return {s.begin(), s.end()};
}

namespace {

std::int64_t parse_int(const std::string& s) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw Error(ErrorKind::domain, "bad ratio component '" + s + "'");
    return v;
}

}  // namespace

Ratio Ratio::parse(const std::string& text) {
    Ratio r;
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        r.num = parse_int(text.substr(0, slash));
        r.den = parse_int(text.substr(slash + 1));
    } else {
        double v = 0.0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || p != text.data() + text.size())
            throw Error(ErrorKind::domain, "bad ratio '" + text + "'");
        // Decimal ratios are kept to 1e-9.
        r.den = 1000000000;
        r.num = static_cast<std::int64_t>(std::llround(v * 1e9));
        const auto g = std::gcd(r.num, r.den);
        if (g != 0) {
            r.num /= g;
            r.den /= g;
        }
    }
    if (r.den <= 0 || r.num <= 0 || r.num > r.den)
        throw Error(ErrorKind::domain, "ratio must lie in (0, 1], got '" + text + "'");
    return r;
}

std::size_t Ratio::labeled_count(std::size_t persons) const {
    const auto n = static_cast<std::size_t>(static_cast<std::int64_t>(persons) * num / den);
    return std::max<std::size_t>(1, std::min(n, persons));
}

std::string Ratio::str() const { return std::to_string(num) + "/" + std::to_string(den); }

Index Projection::input_dim() const {
    if (kind == ProjectionKind::kernelized && context) return context->train_features.rows();
    return basis.rows();
}

Matrix Projection::embed(const Matrix& X) const {
    if (kind == ProjectionKind::linear) {
        if (X.rows() != basis.rows())
            throw Error(ErrorKind::shape, "projection expects dimension " + std::to_string(basis.rows()) +
                                              ", got " + std::to_string(X.rows()));
        return basis.transpose() * X;
    }
    if (!context) throw Error(ErrorKind::invariant, "kernelized projection without training context");
    if (X.rows() != context->train_features.rows())
        throw Error(ErrorKind::shape, "projection expects dimension " +
                                          std::to_string(context->train_features.rows()) + ", got " +
                                          std::to_string(X.rows()));
    return basis.transpose() * kernel_columns(*context, X);
}

const char* to_string(Method m) {
    switch (m) {
    case Method::fsl: return "fsl";
    case Method::ssl: return "ssl";
    case Method::mkfsl: return "mkfsl";
    case Method::mkssl: return "mkssl";
    case Method::mkssl_mrank: return "mkssl-mrank";
    }
    return "?";
}

Method parse_method(const std::string& text) {
    for (Method m : {Method::fsl, Method::ssl, Method::mkfsl, Method::mkssl, Method::mkssl_mrank})
        if (text == to_string(m)) return m;
    throw Error(ErrorKind::config, "unknown method '" + text + "'");
}

const char* to_string(MatchMode m) { return m == MatchMode::single_shot ? "single_shot" : "multi_shot"; }
const char* to_string(SplitMode m) { return m == SplitMode::halves ? "halves" : "single_gallery"; }

std::vector<double> default_bandwidths() {
    std::vector<double> c;
    for (int i = 0; i <= 10; ++i) c.push_back(2.0 + 0.1 * i);
    return c;
}

void ExperimentConfig::validate() const {
    if (!(eta > 0)) throw Error(ErrorKind::config, "eta must be positive");
    if (!(theta > 0)) throw Error(ErrorKind::config, "theta must be positive");
    if (k_neighbors < 1) throw Error(ErrorKind::config, "k must be at least 1");
    if (max_iters < 1) throw Error(ErrorKind::config, "max_iters must be at least 1");
    if (trials < 1) throw Error(ErrorKind::config, "trials must be at least 1");
    if (c_grid.empty()) throw Error(ErrorKind::config, "c_grid is empty");
    for (double c : c_grid)
        if (!(c > 0)) throw Error(ErrorKind::config, "bandwidth multipliers must be positive");
    if (stop_tolerance < 0) throw Error(ErrorKind::config, "stop_tolerance must be nonnegative");
    if (subspace_dim && *subspace_dim < 1) throw Error(ErrorKind::config, "subspace_dim must be positive");
    if (methods.empty()) throw Error(ErrorKind::config, "no method selected");
    if (!(rerank_alpha > 0 && rerank_alpha < 1)) throw Error(ErrorKind::config, "rerank_alpha must lie in (0, 1)");
    if (rerank_k < 1) throw Error(ErrorKind::config, "rerank_k must be at least 1");
}

}  // namespace ssreid
