#include "ssreid/cli.hpp"

#include "ssreid/data.hpp"
#include "ssreid/error.hpp"
#include "ssreid/eval.hpp"
#include "ssreid/experiment.hpp"
#include "ssreid/io.hpp"
#include "ssreid/learner.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace ssreid {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& v) {
    T out{};
    const char* b = v.data();
    const char* e = v.data() + v.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (v.empty() || ec != std::errc() || p != e)
        throw Error(ErrorKind::config, "bad value '" + v + "' for key '" + key + "'");
    return out;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::pair<std::string, std::string> split_kv(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::config, "expected key=value, got '" + kv + "'");
    return {trim(kv.substr(0, eq)), trim(kv.substr(eq + 1))};
}

struct SyntheticSpec {
    int persons = 100;
    int images_per_view = 1;
    int latent_dim = 8;
    double noise_sigma = 0.3;
    std::uint64_t seed = 0;
    SyntheticOptions options;

    // Returns false when the key belongs to the experiment config instead.
    bool apply(const std::string& key, const std::string& v) {
        if (key == "persons") persons = parse_value<int>(key, v);
        else if (key == "images_per_view") images_per_view = parse_value<int>(key, v);
        else if (key == "latent_dim") latent_dim = parse_value<int>(key, v);
        else if (key == "noise_sigma") noise_sigma = parse_value<double>(key, v);
        else if (key == "feature_dim") options.feature_dim = parse_value<int>(key, v);
        else if (key == "view_shift") options.view_shift = parse_value<double>(key, v);
        else if (key == "views") options.views = parse_value<int>(key, v);
        else if (key == "data_seed") seed = parse_value<std::uint64_t>(key, v);
        else return false;
        return true;
    }

    json to_json() const {
        return {{"persons", persons},         {"images_per_view", images_per_view}, {"latent_dim", latent_dim},
                {"noise_sigma", noise_sigma}, {"feature_dim", options.feature_dim}, {"view_shift", options.view_shift},
                {"views", options.views},     {"data_seed", seed}};
    }
};

std::string absolute_str(const std::string& p) { return fs::absolute(fs::path(p)).lexically_normal().string(); }

void write_manifest(const fs::path& path, const std::string& command, const std::vector<std::string>& args,
                    const std::string& out, const ExperimentConfig& cfg, std::uint64_t data_hash,
                    const std::vector<std::uint64_t>& seeds, const std::vector<fs::path>& artifacts,
                    const json& extra = json::object()) {
    json m;
    m["tool"] = "ssreid";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["args"] = args;
    m["out"] = out;
    m["config"] = config_snapshot(cfg);
    m["dataset_hash"] = hex64(data_hash);
    json s = json::array();
    for (auto v : seeds) s.push_back(hex64(v));
    m["seeds"] = s;
    json a = json::array();
    for (const auto& p : artifacts) a.push_back(p.string());
    m["artifacts"] = a;
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io, "cannot write manifest '" + path.string() + "'");
    f << m.dump(2) << '\n';
}

ExperimentConfig build_config(const std::string& config_path, const std::vector<std::string>& sets) {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    for (const auto& kv : sets) {
        auto [k, v] = split_kv(kv);
        apply_config_value(cfg, k, v);
    }
    return cfg;
}

FeatureFormat format_of(const std::string& name, const std::string& path) {
    if (name.empty()) return guess_format(path);
    if (name == "csv") return FeatureFormat::csv;
    if (name == "binary") return FeatureFormat::binary;
    throw Error(ErrorKind::config, "unknown feature format '" + name + "'");
}

struct Common {
    std::string config;
    std::vector<std::string> sets;

    void add(CLI::App* app) {
        app->add_option("--config", config, "flat key=value config file");
        app->add_option("--set", sets, "override a config key (key=value)");
    }
    void record(std::vector<std::string>& args) const {
        if (!config.empty()) args.insert(args.end(), {"--config", absolute_str(config)});
        for (const auto& s : sets) args.insert(args.end(), {"--set", s});
    }
};

int cmd_train(const std::string& features, const std::string& format, const Common& common, const std::string& method,
              const std::string& out_path, const std::string& manifest_path, const std::string& log_path,
              std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg = build_config(common.config, common.sets);
    if (!method.empty()) cfg.methods = {parse_method(method)};
    cfg.validate();
    if (cfg.methods.size() != 1) throw Error(ErrorKind::config, "train takes exactly one method");
    const Method m = cfg.methods.front();

    const FeatureSet data = load_feature_set(features, format_of(format, features));
    std::vector<Index> cols = data.indices_with(SplitTag::labeled);
    if (cols.empty()) throw Error(ErrorKind::shape, "no labeled samples in '" + features + "'");
    for (Index j : data.indices_with(SplitTag::unlabeled)) cols.push_back(j);
    std::sort(cols.begin(), cols.end());
    const FeatureSet train = data.select(cols);
    const std::vector<Index> lab = train.indices_with(SplitTag::labeled);
    const std::vector<Index> unl = train.indices_with(SplitTag::unlabeled);

    std::vector<std::string> log_lines;
    TrainOptions o = TrainOptions::from(cfg);
    o.log = [&](const std::string& line) {
        log_lines.push_back(line);
        if (line.rfind("warning", 0) == 0) err << line << '\n';
        else out << line << '\n';
    };

    TrainState st;
    if (m == Method::fsl || m == Method::ssl) {
        std::vector<PersonId> ids;
        std::vector<int> views_u;
        for (Index i : lab) ids.push_back(*train.person_id[static_cast<std::size_t>(i)]);
        for (Index i : unl) views_u.push_back(train.view_id[static_cast<std::size_t>(i)]);
        const Matrix X_l = train.features(Eigen::all, lab);
        const Matrix X_u = train.features(Eigen::all, unl);
        o.supervised_only = m == Method::fsl;
        st = self_train(X_l, ids, X_u, views_u, o);
    } else {
        o.supervised_only = m == Method::mkfsl;
        KernelSpec spec;
        spec.c_grid = cfg.c_grid;
        const auto cache = KernelCache::from_environment();
        spec.cache = cache ? &*cache : nullptr;
        st = fit_kernelized(train.features, train.person_id, train.view_id, lab, o, spec);
    }

    save_projection(st.projection, out_path);
    const fs::path log_file = log_path.empty() ? fs::path(out_path + ".log") : fs::path(log_path);
    {
        std::ofstream lf(log_file, std::ios::binary);
        if (!lf) throw Error(ErrorKind::io, "cannot write '" + log_file.string() + "'");
        for (const auto& l : log_lines) lf << l << '\n';
    }
    std::vector<std::string> args{"--features", absolute_str(features), "--method", to_string(m)};
    if (!format.empty()) args.insert(args.end(), {"--format", format});
    common.record(args);
    const fs::path mpath = manifest_path.empty() ? fs::path(out_path + ".manifest.json") : fs::path(manifest_path);
    json extra{{"iterations", st.iteration}, {"converged", st.converged}, {"subspace_dim", st.projection.subspace_dim()}};
    if (!st.message.empty()) extra["warning"] = st.message;
    write_manifest(mpath, "train", args, absolute_str(out_path), cfg, dataset_hash(data), {cfg.rng_seed},
                   {fs::path(out_path), log_file}, extra);
    return 0;
}

int cmd_eval(const std::string& projection, const std::string& features, const std::string& format,
             const Common& common, bool rerank, const std::string& out_dir, std::ostream& out) {
    ExperimentConfig cfg = build_config(common.config, common.sets);
    cfg.validate();
    const Projection p = load_projection(projection);
    const FeatureSet data = load_feature_set(features, format_of(format, features));
    const FeatureSet probes = data.select(data.indices_with(SplitTag::probe));
    const FeatureSet gallery = data.select(data.indices_with(SplitTag::gallery));
    if (probes.size() == 0 || gallery.size() == 0)
        throw Error(ErrorKind::shape, "evaluation needs samples tagged probe and gallery");

    const Matrix D = distances(p, probes.features, gallery.features);
    const CmcCurve base = cmc(D, probes.person_id, gallery.person_id, cfg.match_mode);
    std::optional<CmcCurve> rr;
    if (rerank) {
        const Matrix Dgg = distances(p, gallery.features, gallery.features);
        rr = cmc(manifold_rerank(D, Dgg, cfg.rerank_alpha, cfg.rerank_k), probes.person_id, gallery.person_id);
    }

    fs::create_directories(out_dir);
    const fs::path cmc_path = fs::path(out_dir) / "cmc.csv";
    const fs::path sum_path = fs::path(out_dir) / "summary.txt";
    {
        std::ofstream f(cmc_path, std::ios::binary);
        if (!f) throw Error(ErrorKind::io, "cannot write '" + cmc_path.string() + "'");
        f << "rank,baseline" << (rr ? ",rerank" : "") << '\n';
        char buf[64];
        for (std::size_t r = 1; r <= base.rates.size(); ++r) {
            f << r;
            std::snprintf(buf, sizeof buf, ",%.6f", base.at(r));
            f << buf;
            if (rr) {
                std::snprintf(buf, sizeof buf, ",%.6f", rr->at(r));
                f << buf;
            }
            f << '\n';
        }
    }
    std::ostringstream s;
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %8s %8s %8s %8s\n", "ranking", "r=1", "r=5", "r=10", "r=20");
    s << line;
    auto row = [&](const char* name, const CmcCurve& c) {
        std::snprintf(line, sizeof line, "%-10s %8.2f %8.2f %8.2f %8.2f\n", name, 100 * c.at(1), 100 * c.at(5),
                      100 * c.at(10), 100 * c.at(20));
        s << line;
    };
    row("baseline", base);
    if (rr) row("rerank", *rr);
    s << "probes=" << base.probes_evaluated << " excluded=" << base.probes_excluded << " gallery=" << gallery.size()
      << '\n';
    {
        std::ofstream f(sum_path, std::ios::binary);
        if (!f) throw Error(ErrorKind::io, "cannot write '" + sum_path.string() + "'");
        f << s.str();
    }
    out << s.str();

    std::vector<std::string> args{"--projection", absolute_str(projection), "--features", absolute_str(features)};
    if (!format.empty()) args.insert(args.end(), {"--format", format});
    if (rerank) args.push_back("--rerank");
    common.record(args);
    write_manifest(fs::path(out_dir) / "manifest.json", "eval", args, absolute_str(out_dir), cfg, dataset_hash(data),
                   {}, {cmc_path, sum_path});
    return 0;
}

int cmd_experiment(const std::string& features, const std::string& format, const std::vector<std::string>& synthetic,
                   bool use_synthetic, const Common& common, const std::string& method, int jobs,
                   const std::string& out_dir, std::ostream& out) {
    ExperimentConfig cfg = build_config(common.config, common.sets);
    SyntheticSpec syn;
    for (const auto& kv : synthetic) {
        auto [k, v] = split_kv(kv);
        if (!syn.apply(k, v)) apply_config_value(cfg, k, v);
    }
    if (!method.empty()) apply_config_value(cfg, "method", method);
    cfg.validate();
    if (jobs < 1) throw Error(ErrorKind::config, "--jobs must be at least 1");
    if (use_synthetic == !features.empty())
        throw Error(ErrorKind::config, "give exactly one of --features or --synthetic");

    FeatureSet data = use_synthetic ? generate_synthetic_crossview(syn.persons, syn.images_per_view, syn.latent_dim,
                                                                   syn.noise_sigma, syn.seed, syn.options)
                                    : load_feature_set(features, format_of(format, features));
    const ExperimentReport report = run_experiment(data, cfg, jobs);
    const auto paths = write_report(report, out_dir);
    out << summary_table(report);

    std::vector<std::string> args;
    if (use_synthetic) {
        args.push_back("--synthetic");
        args.insert(args.end(), synthetic.begin(), synthetic.end());
    } else {
        args.insert(args.end(), {"--features", absolute_str(features)});
        if (!format.empty()) args.insert(args.end(), {"--format", format});
    }
    if (!method.empty()) args.insert(args.end(), {"--method", method});
    common.record(args);
    json extra;
    if (use_synthetic) extra["synthetic"] = syn.to_json();
    int failed = 0;
    for (const auto& t : report.trials) failed += t.ok ? 0 : 1;
    extra["failed_trials"] = failed;
    write_manifest(fs::path(out_dir) / "manifest.json", "experiment", args, absolute_str(out_dir), cfg,
                   dataset_hash(data), report.seeds(), paths, extra);
    return 0;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_rerun(const std::string& manifest, const std::string& out_override, std::ostream& out, std::ostream& err) {
    std::ifstream f(manifest);
    if (!f) throw Error(ErrorKind::io, "cannot open manifest '" + manifest + "'");
    json m;
    try {
        f >> m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, std::string("manifest: ") + e.what());
    }
    if (!m.contains("command") || !m.contains("args") || !m.contains("out"))
        throw Error(ErrorKind::format, "manifest lacks command, args or out");
    std::vector<std::string> args{m["command"].get<std::string>()};
    for (const auto& a : m["args"]) args.push_back(a.get<std::string>());
    const std::string target = out_override.empty() ? m["out"].get<std::string>() : out_override;
    args.insert(args.end(), {"--out", target});
    return dispatch(args, out, err);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Semi-supervised cross-view subspace learning for person re-identification", "ssreid"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::string features, format, method, out_path, manifest, log_path, projection;
    std::vector<std::string> synthetic;
    bool rerank = false;
    int jobs = 1;
    Common common;

    auto* train = app.add_subcommand("train", "fit a projection from tagged labeled/unlabeled samples");
    train->add_option("--features", features, "feature file (csv or binary)")->required();
    train->add_option("--format", format, "csv or binary (default: by extension)");
    train->add_option("--method", method, "fsl, ssl, mkfsl, mkssl or mkssl-mrank");
    train->add_option("--out", out_path, "projection file to write")->required();
    train->add_option("--manifest", manifest, "manifest path (default: <out>.manifest.json)");
    train->add_option("--log", log_path, "training log path (default: <out>.log)");
    common.add(train);

    auto* eval = app.add_subcommand("eval", "evaluate a projection on samples tagged probe/gallery");
    eval->add_option("--projection", projection, "projection file")->required();
    eval->add_option("--features", features, "feature file")->required();
    eval->add_option("--format", format, "csv or binary (default: by extension)");
    eval->add_flag("--rerank", rerank, "also report manifold re-ranking");
    eval->add_option("--out", out_path, "output directory")->required();
    common.add(eval);

    auto* exp = app.add_subcommand("experiment", "repeated random-split experiment");
    auto* feat_opt = exp->add_option("--features", features, "feature file");
    exp->add_option("--format", format, "csv or binary (default: by extension)");
    auto* syn_opt = exp->add_option("--synthetic", synthetic, "generate data: key=value ...")->expected(0, -1);
    feat_opt->excludes(syn_opt);
    exp->add_option("--method", method, "comma-separated methods");
    exp->add_option("--jobs", jobs, "parallel trials");
    exp->add_option("--out", out_path, "output directory")->required();
    common.add(exp);

    auto* rerun = app.add_subcommand("rerun", "repeat a recorded run from its manifest");
    rerun->add_option("--manifest", manifest, "manifest.json of a previous run")->required();
    rerun->add_option("--out", out_path, "output location (default: the recorded one)");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    if (train->parsed())
        return cmd_train(features, format, common, method, out_path, manifest, log_path, out, err);
    if (eval->parsed()) return cmd_eval(projection, features, format, common, rerank, out_path, out);
    if (exp->parsed())
        return cmd_experiment(features, format, synthetic, syn_opt->count() > 0, common, method, jobs, out_path, out);
    return cmd_rerun(manifest, out_path, out, err);
}

}  // namespace

void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (key == "eta") cfg.eta = parse_value<double>(key, v);
    else if (key == "k_neighbors") cfg.k_neighbors = parse_value<int>(key, v);
    else if (key == "max_iters") cfg.max_iters = parse_value<int>(key, v);
    else if (key == "theta") cfg.theta = parse_value<double>(key, v);
    else if (key == "c_grid") {
        cfg.c_grid.clear();
        for (const auto& c : split_list(v)) cfg.c_grid.push_back(parse_value<double>(key, c));
    } else if (key == "ratio") {
        try {
            cfg.ratio = Ratio::parse(v);
        } catch (const Error& e) {
            throw Error(ErrorKind::config, e.what());
        }
    } else if (key == "trials") cfg.trials = parse_value<int>(key, v);
    else if (key == "seed") cfg.rng_seed = parse_value<std::uint64_t>(key, v);
    else if (key == "stop_tolerance") cfg.stop_tolerance = parse_value<double>(key, v);
    else if (key == "subspace_dim") {
        if (v == "auto") cfg.subspace_dim.reset();
        else cfg.subspace_dim = parse_value<int>(key, v);
    } else if (key == "method") {
        cfg.methods.clear();
        for (const auto& m : split_list(v)) cfg.methods.push_back(parse_method(m));
    } else if (key == "rerank_alpha") cfg.rerank_alpha = parse_value<double>(key, v);
    else if (key == "rerank_k") cfg.rerank_k = parse_value<int>(key, v);
    else if (key == "match_mode") {
        if (v == "single_shot") cfg.match_mode = MatchMode::single_shot;
        else if (v == "multi_shot") cfg.match_mode = MatchMode::multi_shot;
        else throw Error(ErrorKind::config, "match_mode must be single_shot or multi_shot");
    } else if (key == "split_mode") {
        if (v == "halves") cfg.split_mode = SplitMode::halves;
        else if (v == "single_gallery") cfg.split_mode = SplitMode::single_gallery;
        else throw Error(ErrorKind::config, "split_mode must be halves or single_gallery");
    } else {
        throw Error(ErrorKind::config, "unknown config key '" + key + "'");
    }
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::config, "config line " + std::to_string(lineno) + ": expected key=value");
        try {
            apply_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(ErrorKind::config, "config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "cannot open config '" + path + "'");
    return parse_config(in);
}

std::map<std::string, std::string> config_snapshot(const ExperimentConfig& cfg) {
    std::map<std::string, std::string> s;
    s["eta"] = fmt_double(cfg.eta);
    s["k_neighbors"] = std::to_string(cfg.k_neighbors);
    s["max_iters"] = std::to_string(cfg.max_iters);
    s["theta"] = fmt_double(cfg.theta);
    std::string grid;
    for (double c : cfg.c_grid) grid += (grid.empty() ? "" : ",") + fmt_double(c);
    s["c_grid"] = grid;
    s["ratio"] = cfg.ratio.str();
    s["trials"] = std::to_string(cfg.trials);
    s["seed"] = std::to_string(cfg.rng_seed);
    s["stop_tolerance"] = fmt_double(cfg.stop_tolerance);
    s["subspace_dim"] = cfg.subspace_dim ? std::to_string(*cfg.subspace_dim) : "auto";
    std::string methods;
    for (Method m : cfg.methods) methods += (methods.empty() ? "" : ",") + std::string(to_string(m));
    s["method"] = methods;
    s["rerank_alpha"] = fmt_double(cfg.rerank_alpha);
    s["rerank_k"] = std::to_string(cfg.rerank_k);
    s["match_mode"] = to_string(cfg.match_mode);
    s["split_mode"] = to_string(cfg.split_mode);
    return s;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const Error& e) {
        err << "ssreid: " << to_string(e.kind()) << ": " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "ssreid: I/O error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "ssreid: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace ssreid
