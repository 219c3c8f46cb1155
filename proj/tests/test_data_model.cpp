#include "helpers.hpp"

#include "ssreid/data.hpp"
#include "ssreid/error.hpp"
#include "ssreid/eval.hpp"
#include "ssreid/experiment.hpp"
#include "ssreid/io.hpp"
#include "ssreid/learner.hpp"
#include "ssreid/linalg.hpp"

#include <doctest.h>

#include <functional>

#include <set>
#include <sstream>

using namespace ssreid;
using testutil::random_matrix;

namespace {

FeatureSet random_feature_set(std::mt19937_64& rng, Index d, Index n) {
    FeatureSet fs;
    fs.features = random_matrix(rng, d, n);
    for (Index j = 0; j < n; ++j) {
        const auto tag = static_cast<SplitTag>(j % 4);
        fs.split.push_back(tag);
        fs.person_id.push_back((j % 3 == 1 && tag != SplitTag::labeled) ? std::nullopt : std::optional<PersonId>(j / 2 - 7));
        fs.view_id.push_back(static_cast<int>(j % 3));
    }
    return fs;
}

void expect_same(const FeatureSet& a, const FeatureSet& b) {
    CHECK(a.features.rows() == b.features.rows());
    CHECK(a.features.cols() == b.features.cols());
    CHECK(a.features == b.features);
    CHECK(a.person_id == b.person_id);
    CHECK(a.view_id == b.view_id);
    CHECK(a.split == b.split);
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::config;
}

}  // namespace

TEST_CASE("csv with four samples in two views") {
    std::istringstream in("# d=3 n=4 cols=person_id,view_id,split,f0..f2\n"
                          "1,0,labeled,0.5,1,2\n"
                          "1,1,labeled,0.25,-1,3e-2\n"
                          ",0,unlabeled,1,2,3\n"
                          "2,1,gallery,4,5,6\n");
    const FeatureSet fs = read_csv(in);
    CHECK(fs.dim() == 3);
    CHECK(fs.size() == 4);
    CHECK(fs.features(2, 1) == doctest::Approx(0.03));
    CHECK_FALSE(fs.person_id[2].has_value());
    CHECK(fs.split[3] == SplitTag::gallery);
    CHECK(fs.distinct_views() == std::vector<int>{0, 1});
}

TEST_CASE("csv row one feature short is a shape error naming the row") {
    std::istringstream in("# d=3 n=2 cols=person_id,view_id,split,f0..f2\n"
                          "1,0,labeled,0.5,1,2\n"
                          "1,1,labeled,0.25,-1\n");
    try {
        read_csv(in);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::shape);
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("csv parse errors carry the line number") {
    std::istringstream bad_number("# d=1 n=1 cols=person_id,view_id,split,f0..f0\n\n1,0,labeled,abc\n");
    try {
        read_csv(bad_number);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::parse);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::istringstream no_header("1,0,labeled,1\n");
    CHECK(kind_of([&] { read_csv(no_header); }) == ErrorKind::parse);
    std::istringstream bad_tag("# d=1 n=1 cols=person_id,view_id,split,f0..f0\n1,0,train,1\n");
    CHECK(kind_of([&] { read_csv(bad_tag); }) == ErrorKind::parse);
    std::istringstream count("# d=1 n=3 cols=person_id,view_id,split,f0..f0\n1,0,labeled,1\n");
    CHECK(kind_of([&] { read_csv(count); }) == ErrorKind::shape);
    std::istringstream unlabeled_id("# d=1 n=1 cols=person_id,view_id,split,f0..f0\n,0,labeled,1\n");
    CHECK(kind_of([&] { read_csv(unlabeled_id); }) == ErrorKind::invariant);
}

TEST_CASE("binary round trip is bit-identical") {
    std::mt19937_64 rng(1);
    const FeatureSet fs = random_feature_set(rng, 7, 23);
    std::stringstream buf;
    write_binary(fs, buf);
    expect_same(read_binary(buf), fs);
}

TEST_CASE("csv write then read is the identity") {
    std::mt19937_64 rng(2);
    FeatureSet fs = random_feature_set(rng, 5, 17);
    fs.features(0, 0) = 1e-300;
    fs.features(1, 0) = -0.0;
    std::stringstream buf;
    write_csv(fs, buf);
    const FeatureSet back = read_csv(buf);
    expect_same(back, fs);
    std::stringstream bin;
    write_binary(back, bin);
    expect_same(read_binary(bin), fs);
}

TEST_CASE("feature files on disk pick their format by extension") {
    std::mt19937_64 rng(3);
    const FeatureSet fs = random_feature_set(rng, 3, 8);
    const auto dir = testutil::scratch("fsio");
    save_feature_set(fs, dir / "a.bin", FeatureFormat::binary);
    save_feature_set(fs, dir / "a.csv", FeatureFormat::csv);
    expect_same(load_feature_set(dir / "a.bin"), fs);
    expect_same(load_feature_set(dir / "a.csv"), fs);
    CHECK(kind_of([&] { load_feature_set(dir / "missing.csv"); }) == ErrorKind::io);
    std::filesystem::remove_all(dir);
}

TEST_CASE("binary reader rejects foreign files") {
    std::stringstream junk("NOPE....");
    CHECK(kind_of([&] { read_binary(junk); }) == ErrorKind::format);
}

TEST_CASE("split by ratio") {
    FeatureSet fs;
    fs.features = Matrix::Zero(2, 632);
    for (int j = 0; j < 632; ++j) {
        fs.person_id.emplace_back(j % 316);
        fs.view_id.push_back(j / 316);
        fs.split.push_back(SplitTag::unlabeled);
    }
    SUBCASE("316 persons at one third label 105 of them") {
        const auto part = split_by_ratio(fs, Ratio::parse("1/3"), 9);
        std::set<PersonId> persons;
        for (Index i : part.labeled_indices) persons.insert(*fs.person_id[static_cast<std::size_t>(i)]);
        CHECK(persons.size() == 105);
        CHECK(part.labeled_indices.size() == 210);
        CHECK(part.unlabeled_indices.size() == 632 - 210);
    }
    SUBCASE("ratio one labels everyone") {
        const auto part = split_by_ratio(fs, Ratio::parse("1"), 9);
        CHECK(part.labeled_indices.size() == 632);
        CHECK(part.unlabeled_indices.empty());
    }
    SUBCASE("tiny ratios keep one person") {
        const auto part = split_by_ratio(fs, Ratio::parse("1/1000"), 9);
        CHECK(part.labeled_indices.size() == 2);
    }
    SUBCASE("same seed gives the same partition") {
        const auto a = split_by_ratio(fs, Ratio::parse("1/5"), 42);
        const auto b = split_by_ratio(fs, Ratio::parse("1/5"), 42);
        CHECK(a.labeled_indices == b.labeled_indices);
        CHECK(a.unlabeled_indices == b.unlabeled_indices);
    }
    SUBCASE("no person straddles the boundary") {
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            const auto part = split_by_ratio(fs, Ratio{static_cast<std::int64_t>(seed % 7 + 1), 8}, seed);
            std::set<PersonId> lab, unl;
            for (Index i : part.labeled_indices) lab.insert(*fs.person_id[static_cast<std::size_t>(i)]);
            for (Index i : part.unlabeled_indices) unl.insert(*fs.person_id[static_cast<std::size_t>(i)]);
            for (PersonId p : lab) CHECK(unl.count(p) == 0);
            CHECK(part.labeled_indices.size() + part.unlabeled_indices.size() == 632);
        }
    }
    SUBCASE("out of range ratios are domain errors") {
        CHECK(kind_of([] { Ratio::parse("0"); }) == ErrorKind::domain);
        CHECK(kind_of([] { Ratio::parse("4/3"); }) == ErrorKind::domain);
        CHECK(kind_of([] { Ratio::parse("-1/3"); }) == ErrorKind::domain);
        CHECK(kind_of([&] { split_by_ratio(fs, Ratio{0, 3}, 1); }) == ErrorKind::domain);
    }
    CHECK(Ratio::parse("0.5").str() == "1/2");
}

TEST_CASE("synthetic generator without noise") {
    Matrix latent;
    SyntheticOptions opt;
    opt.feature_dim = 12;
    const FeatureSet fs = generate_synthetic_crossview(50, 1, 4, 0.0, 3, opt, &latent);
    CHECK(fs.size() == 100);
    CHECK(fs.dim() == 12);
    CHECK(latent.cols() == 50);
    // Every view is an exact linear image of the latent vectors.
    Eigen::FullPivLU<Matrix> lu0(fs.features.leftCols(50));
    CHECK(lu0.rank() == 4);
    // Latent-space nearest cross-view neighbour is always the true match.
    Matrix lat_by_col(4, 100);
    for (Index j = 0; j < 100; ++j) lat_by_col.col(j) = latent.col(*fs.person_id[static_cast<std::size_t>(j)]);
    const Matrix D = squared_distances(lat_by_col.leftCols(50), lat_by_col.rightCols(50));
    int hits = 0;
    for (Index i = 0; i < 50; ++i) {
        Index arg = 0;
        D.row(i).minCoeff(&arg);
        hits += fs.person_id[static_cast<std::size_t>(50 + arg)] == fs.person_id[static_cast<std::size_t>(i)];
    }
    CHECK(hits == 50);
}

TEST_CASE("synthetic generator is deterministic and tags views") {
    const FeatureSet a = generate_synthetic_crossview(10, 2, 3, 0.5, 77);
    const FeatureSet b = generate_synthetic_crossview(10, 2, 3, 0.5, 77);
    const FeatureSet c = generate_synthetic_crossview(10, 2, 3, 0.5, 78);
    CHECK(a.features == b.features);
    CHECK(a.features != c.features);
    CHECK(a.size() == 40);
    CHECK(a.view_id[0] == 0);
    CHECK(a.view_id[39] == 1);
    CHECK(kind_of([] { generate_synthetic_crossview(1, 1, 3, 0.1, 0); }) == ErrorKind::domain);
    CHECK(kind_of([] { generate_synthetic_crossview(5, 1, 0, 0.1, 0); }) == ErrorKind::domain);
}

TEST_CASE("supervised learners beat chance on noisy synthetic data") {
    const FeatureSet fs = generate_synthetic_crossview(100, 1, 8, 0.5, 4);
    ExperimentConfig cfg;
    cfg.ratio = Ratio{1, 1};
    cfg.trials = 3;
    cfg.methods = {Method::fsl, Method::mkfsl};
    // A full-rank linear basis only whitens; keep it compact.
    cfg.subspace_dim = 8;
    const auto rep = run_experiment(fs, cfg);
    CHECK(rep.mean(Method::fsl).at(1) > 0.1);
    CHECK(rep.mean(Method::mkfsl).at(1) > 0.1);
}

TEST_CASE("projection files round trip") {
    std::mt19937_64 rng(5);
    SUBCASE("linear") {
        Projection p;
        p.basis = random_matrix(rng, 9, 4);
        std::stringstream buf;
        write_projection(p, buf);
        const Projection q = read_projection(buf);
        CHECK(q.kind == ProjectionKind::linear);
        CHECK(q.basis == p.basis);
        CHECK(q.subspace_dim() == 4);
    }
    SUBCASE("kernelized keeps test distances") {
        FeatureSet fs = generate_synthetic_crossview(12, 1, 3, 0.2, 6);
        std::vector<Index> lab{0, 1, 2, 3, 12, 13, 14, 15};
        TrainOptions o;
        const TrainState st = fit_kernelized(fs.features, fs.person_id, fs.view_id, lab, o);
        const auto dir = testutil::scratch("proj");
        save_projection(st.projection, dir / "k.sspj");
        const Projection q = load_projection(dir / "k.sspj");
        const Matrix probes = random_matrix(rng, fs.dim(), 5), gallery = random_matrix(rng, fs.dim(), 6);
        CHECK(distances(q, probes, gallery) == distances(st.projection, probes, gallery));
        CHECK(q.context->beta == st.projection.context->beta);
        std::filesystem::remove_all(dir);
    }
    SUBCASE("wrong magic") {
        std::stringstream buf("SSFS\x01");
        CHECK(kind_of([&] { read_projection(buf); }) == ErrorKind::format);
    }
    SUBCASE("version mismatch") {
        Projection p;
        p.basis = random_matrix(rng, 2, 2);
        std::stringstream buf;
        write_projection(p, buf);
        std::string s = buf.str();
        s[4] = 9;
        std::stringstream bad(s);
        CHECK(kind_of([&] { read_projection(bad); }) == ErrorKind::format);
    }
}

TEST_CASE("dataset hash tracks content") {
    std::mt19937_64 rng(8);
    FeatureSet fs = random_feature_set(rng, 3, 6);
    const auto h = dataset_hash(fs);
    CHECK(dataset_hash(fs) == h);
    fs.view_id[2] += 1;
    CHECK(dataset_hash(fs) != h);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
}
