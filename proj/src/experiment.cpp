#include "ssreid/experiment.hpp"

#include "ssreid/data.hpp"
#include "ssreid/error.hpp"
#include "ssreid/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace ssreid {

std::uint64_t trial_seed(std::uint64_t master, int trial) {
    return splitmix64(master + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(trial + 1));
}

std::vector<std::uint64_t> ExperimentReport::seeds() const {
    std::vector<std::uint64_t> s;
    for (const auto& t : trials) s.push_back(t.seed);
    return s;
}

CmcCurve ExperimentReport::mean(Method m) const {
    std::vector<CmcCurve> curves;
    for (const auto& t : trials) {
        if (!t.ok) continue;
        auto it = t.methods.find(m);
        if (it != t.methods.end()) curves.push_back(it->second.curve);
    }
    return mean_curve(curves);
}

namespace {

struct TestSplit {
    Matrix probes, gallery;
    IdList probe_ids, gallery_ids;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TrialResult run_trial(const FeatureSet& fs, const ExperimentConfig& cfg, int trial, const KernelCache* cache) {
    TrialResult res;
    res.trial = trial;
    res.seed = trial_seed(cfg.rng_seed, trial);
    std::mt19937_64 rng(res.seed);

    auto persons = fs.distinct_persons();
    if (persons.size() < 4) throw Error(ErrorKind::shape, "need at least 4 persons for a train/test split");
    std::shuffle(persons.begin(), persons.end(), rng);
    const auto half = persons.size() / 2;
    const std::set<PersonId> train_set(persons.begin(), persons.begin() + static_cast<std::ptrdiff_t>(half));

    std::vector<Index> train_cols, test_cols, distractors;
    for (Index j = 0; j < fs.size(); ++j) {
        const auto& id = fs.person_id[static_cast<std::size_t>(j)];
        if (!id) distractors.push_back(j);
        else if (train_set.count(*id)) train_cols.push_back(j);
        else test_cols.push_back(j);
    }

    std::vector<Index> probe_cols, gallery_cols;
    if (cfg.split_mode == SplitMode::halves) {
        int probe_view = fs.view_id[static_cast<std::size_t>(test_cols.front())];
        for (Index j : test_cols) probe_view = std::min(probe_view, fs.view_id[static_cast<std::size_t>(j)]);
        for (Index j : test_cols)
            (fs.view_id[static_cast<std::size_t>(j)] == probe_view ? probe_cols : gallery_cols).push_back(j);
    } else {
        std::map<PersonId, std::vector<Index>> by_person;
        for (Index j : test_cols) by_person[*fs.person_id[static_cast<std::size_t>(j)]].push_back(j);
        for (auto& [pid, cols] : by_person) {
            std::uniform_int_distribution<std::size_t> pick(0, cols.size() - 1);
            const std::size_t g = pick(rng);
            for (std::size_t i = 0; i < cols.size(); ++i) (i == g ? gallery_cols : probe_cols).push_back(cols[i]);
        }
        std::sort(probe_cols.begin(), probe_cols.end());
        std::sort(gallery_cols.begin(), gallery_cols.end());
    }
    gallery_cols.insert(gallery_cols.end(), distractors.begin(), distractors.end());
    if (probe_cols.empty() || gallery_cols.empty()) throw Error(ErrorKind::shape, "empty probe or gallery set");

    TestSplit test;
    const FeatureSet pf = fs.select(probe_cols);
    const FeatureSet gf = fs.select(gallery_cols);
    test.probes = pf.features;
    test.gallery = gf.features;
    test.probe_ids = pf.person_id;
    test.gallery_ids = gf.person_id;

    const FeatureSet train = fs.select(train_cols);
    const LabeledPartition part = split_by_ratio(train, cfg.ratio, splitmix64(res.seed));
    std::vector<PersonId> lab_ids;
    std::vector<int> views_u;
    for (Index i : part.labeled_indices) lab_ids.push_back(*train.person_id[static_cast<std::size_t>(i)]);
    for (Index i : part.unlabeled_indices) views_u.push_back(train.view_id[static_cast<std::size_t>(i)]);
    const Matrix X_l = train.features(Eigen::all, part.labeled_indices);
    const Matrix X_u = train.features(Eigen::all, part.unlabeled_indices);

    auto rank1_of = [&](const Projection& p) {
        return cmc(distances(p, test.probes, test.gallery), test.probe_ids, test.gallery_ids, cfg.match_mode).at(1);
    };

    std::optional<std::pair<TrainState, double>> mkssl_state;

    auto history_of = [&](const TrainState& st, const std::vector<double>& r1) {
        std::vector<HistoryRow> rows;
        for (std::size_t i = 0; i < st.history.size(); ++i) {
            const auto& h = st.history[i];
            rows.push_back({h.iteration, h.edges_changed, h.objective.total(), i < r1.size() ? r1[i] : 0.0});
        }
        return rows;
    };

    for (Method m : cfg.methods) {
        MethodResult mr;
        TrainOptions o = TrainOptions::from(cfg);
        std::vector<double> r1;
        o.observer = [&](const IterationRecord&, const Projection& p) { r1.push_back(rank1_of(p)); };
        const auto t0 = std::chrono::steady_clock::now();
        switch (m) {
        case Method::fsl: {
            const Projection p = fit_supervised_linear(X_l, lab_ids, cfg.subspace_dim, cfg.theta);
            mr.train_seconds = seconds_since(t0);
            mr.curve = cmc(distances(p, test.probes, test.gallery), test.probe_ids, test.gallery_ids, cfg.match_mode);
            break;
        }
        case Method::ssl: {
            const TrainState st = self_train(X_l, lab_ids, X_u, views_u, o);
            mr.train_seconds = seconds_since(t0);
            mr.curve = cmc(distances(st.projection, test.probes, test.gallery), test.probe_ids, test.gallery_ids,
                           cfg.match_mode);
            mr.history = history_of(st, r1);
            mr.converged = st.converged;
            break;
        }
        case Method::mkfsl: {
            o.supervised_only = true;
            KernelSpec spec;
            spec.c_grid = cfg.c_grid;
            spec.cache = cache;
            const TrainState st = fit_kernelized(train.features, train.person_id, train.view_id, part.labeled_indices, o, spec);
            mr.train_seconds = seconds_since(t0);
            mr.curve = cmc(distances(st.projection, test.probes, test.gallery), test.probe_ids, test.gallery_ids,
                           cfg.match_mode);
            break;
        }
        case Method::mkssl:
        case Method::mkssl_mrank: {
            if (!mkssl_state) {
                TrainOptions ko = TrainOptions::from(cfg);
                std::vector<double> kr1;
                ko.observer = [&](const IterationRecord&, const Projection& p) { kr1.push_back(rank1_of(p)); };
                KernelSpec spec;
                spec.c_grid = cfg.c_grid;
                spec.cache = cache;
                TrainState st = fit_kernelized(train.features, train.person_id, train.view_id, part.labeled_indices, ko, spec);
                const double secs = seconds_since(t0);
                r1 = kr1;
                mkssl_state.emplace(std::move(st), secs);
                mr.history = history_of(mkssl_state->first, kr1);
            }
            const auto& [st, secs] = *mkssl_state;
            mr.train_seconds = secs;
            mr.converged = st.converged;
            if (mr.history.empty()) {
                for (const auto& [mm, other] : res.methods)
                    if (mm == Method::mkssl || mm == Method::mkssl_mrank) mr.history = other.history;
            }
            const Matrix Dpg = distances(st.projection, test.probes, test.gallery);
            if (m == Method::mkssl) {
                mr.curve = cmc(Dpg, test.probe_ids, test.gallery_ids, cfg.match_mode);
            } else {
                const Matrix Dgg = distances(st.projection, test.gallery, test.gallery);
                mr.curve = cmc(manifold_rerank(Dpg, Dgg, cfg.rerank_alpha, cfg.rerank_k), test.probe_ids, test.gallery_ids);
            }
            break;
        }
        }
        res.methods[m] = std::move(mr);
    }
    return res;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

ExperimentReport run_experiment(const FeatureSet& fs, const ExperimentConfig& config, int jobs) {
    config.validate();
    fs.validate();
    if (fs.distinct_views().size() < 2) throw Error(ErrorKind::shape, "cross-view experiments need at least 2 views");
    const auto cache = KernelCache::from_environment();

    ExperimentReport report;
    report.config = config;
    report.trials.resize(static_cast<std::size_t>(config.trials));
    auto one = [&](int t) {
        TrialResult r;
        try {
            r = run_trial(fs, config, t, cache ? &*cache : nullptr);
        } catch (const std::exception& e) {
            r.trial = t;
            r.seed = trial_seed(config.rng_seed, t);
            r.ok = false;
            r.error = e.what();
        }
        report.trials[static_cast<std::size_t>(t)] = std::move(r);
    };
    jobs = std::max(1, std::min(jobs, config.trials));
    if (jobs == 1) {
        for (int t = 0; t < config.trials; ++t) one(t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (int t = next++; t < config.trials; t = next++) one(t);
            });
        for (auto& th : pool) th.join();
    }
    return report;
}

std::string summary_table(const ExperimentReport& report) {
    std::ostringstream s;
    const auto& c = report.config;
    s << "ratio=" << c.ratio.str() << " trials=" << c.trials << " seed=" << c.rng_seed << " eta=" << fmt("%g", c.eta)
      << " k=" << c.k_neighbors << " T=" << c.max_iters << " theta=" << fmt("%g", c.theta)
      << " match=" << to_string(c.match_mode) << "\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-12s %8s %8s %8s %8s %8s\n", "method", "r=1", "r=5", "r=10", "r=20", "iters");
    s << line;
    for (Method m : c.methods) {
        const CmcCurve mean = report.mean(m);
        double iters = 0.0;
        int ok = 0;
        for (const auto& t : report.trials) {
            if (!t.ok) continue;
            const auto it = t.methods.find(m);
            if (it == t.methods.end()) continue;
            iters += static_cast<double>(it->second.history.size());
            ++ok;
        }
        if (ok) iters /= ok;
        std::snprintf(line, sizeof line, "%-12s %8.2f %8.2f %8.2f %8.2f %8.1f\n", to_string(m), 100 * mean.at(1),
                      100 * mean.at(5), 100 * mean.at(10), 100 * mean.at(20), iters);
        s << line;
    }
    for (const auto& t : report.trials)
        if (!t.ok) s << "trial " << t.trial << " failed: " << t.error << "\n";
    return s.str();
}

std::vector<std::filesystem::path> write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    auto open = [&](const std::string& name) {
        const auto p = dir / name;
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error(ErrorKind::io, "cannot write '" + p.string() + "'");
        paths.push_back(p);
        return out;
    };

    for (Method m : report.config.methods) {
        std::vector<const CmcCurve*> curves;
        std::vector<int> ids;
        for (const auto& t : report.trials) {
            if (!t.ok) continue;
            const auto it = t.methods.find(m);
            if (it == t.methods.end()) continue;
            curves.push_back(&it->second.curve);
            ids.push_back(t.trial);
        }
        const CmcCurve mean = report.mean(m);
        auto out = open(std::string("cmc_") + to_string(m) + ".csv");
        out << "rank";
        for (int id : ids) out << ",trial_" << id;
        out << ",mean\n";
        for (std::size_t r = 1; r <= mean.rates.size(); ++r) {
            out << r;
            for (const auto* c : curves) out << ',' << fmt("%.6f", c->at(r));
            out << ',' << fmt("%.6f", mean.at(r)) << '\n';
        }
    }

    auto hist = open("history.csv");
    hist << "method,trial,iter,edges_changed,objective,rank1\n";
    for (Method m : report.config.methods)
        for (const auto& t : report.trials) {
            if (!t.ok) continue;
            const auto it = t.methods.find(m);
            if (it == t.methods.end()) continue;
            for (const auto& h : it->second.history)
                hist << to_string(m) << ',' << t.trial << ',' << h.iteration << ',' << h.edges_changed << ','
                     << fmt("%.10g", h.objective) << ',' << fmt("%.6f", h.rank1) << '\n';
        }

    auto sum = open("summary.txt");
    sum << summary_table(report);

    // Wall-clock times vary between runs, so they live apart from the reproducible outputs.
    auto timing = open("timing.csv");
    timing << "method,trial,train_seconds\n";
    for (Method m : report.config.methods)
        for (const auto& t : report.trials) {
            if (!t.ok) continue;
            const auto it = t.methods.find(m);
            if (it != t.methods.end()) timing << to_string(m) << ',' << t.trial << ',' << fmt("%.6f", it->second.train_seconds) << '\n';
        }
    return paths;
}

}  // namespace ssreid
