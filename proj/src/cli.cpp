#include "dynprop/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "dynprop/errors.hpp"
#include "dynprop/experiment.hpp"
#include "dynprop/tsv.hpp"

namespace dynprop::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Everything a command can be configured with; defaults are the library defaults.
struct Options {
    double alpha = CpiOptions{}.alpha;
    double tol = CpiOptions{}.tol;
    std::string betas;
    std::size_t q = TextGraphOptions{}.window;
    std::size_t folds = TrainConfig{}.folds;
    std::uint64_t seed = TrainConfig{}.seed;
    std::size_t hidden = TrainConfig{}.hidden;
    double lr = TrainConfig{}.learning_rate;
    std::size_t max_epochs = TrainConfig{}.max_epochs;
    std::size_t patience = TrainConfig{}.patience;
    std::string rows = "labeled";
    std::string scheme = "dhgnn";
    unsigned threads = 1;
    bool json = false;
    std::string manifest;

    std::string input, news, authors, subjects, sources, features, words, out;
    std::string data, updates;

    SynthConfig synth;
    std::string replay;
};

MixedWeights parse_betas(const std::string& text) {
    if (text.empty()) return {};
    std::vector<double> v;
    try {
        v = tsv::parse_floats(text);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("--betas expects three comma-separated numbers, got '" + text + "'");
    }
    if (v.size() != 3) throw std::invalid_argument("--betas expects three comma-separated numbers, got '" + text + "'");
    MixedWeights w{v[0], v[1], v[2]};
    w.validate();
    return w;
}

ExperimentConfig experiment_config(const Options& o) {
    ExperimentConfig cfg;
    cfg.model = parse_model_kind(o.scheme);
    cfg.cpi.alpha = o.alpha;
    cfg.cpi.tol = o.tol;
    cfg.betas = parse_betas(o.betas);
    cfg.rows = parse_row_mode(o.rows);
    cfg.train.learning_rate = o.lr;
    cfg.train.hidden = o.hidden;
    cfg.train.max_epochs = o.max_epochs;
    cfg.train.patience = o.patience;
    cfg.train.folds = o.folds;
    cfg.train.seed = o.seed;
    cfg.threads = o.threads;
    cfg.validate();
    return cfg;
}

Json config_json(const Options& o) {
    const auto w = parse_betas(o.betas);
    Json c;
    c["alpha"] = o.alpha;
    c["tol"] = o.tol;
    c["betas"] = {w.beta_an, w.beta_nn, w.beta_aa};
    c["q"] = o.q;
    c["folds"] = o.folds;
    c["seed"] = o.seed;
    c["scheme"] = o.scheme;
    c["hidden"] = o.hidden;
    c["lr"] = o.lr;
    c["max_epochs"] = o.max_epochs;
    c["patience"] = o.patience;
    c["rows"] = o.rows;
    c["threads"] = o.threads;
    Json paths = Json::object();
    const auto put = [&](const char* key, const std::string& v) {
        if (!v.empty()) paths[key] = v;
    };
    put("input", o.input);
    put("news", o.news);
    put("authors", o.authors);
    put("subjects", o.subjects);
    put("sources", o.sources);
    put("features", o.features);
    put("words", o.words);
    put("out", o.out);
    put("data", o.data);
    put("updates", o.updates);
    c["paths"] = paths;
    return c;
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Arguments with path values made absolute so a replay works from any directory.
std::vector<std::string> portable_args(const std::vector<std::string>& args) {
    static const std::vector<std::string> path_flags{"--input", "--news", "--authors", "--subjects",
                                                     "--sources", "--features", "--words", "--out",
                                                     "--data", "--updates", "--manifest"};
    const auto is_path_flag = [&](const std::string& a) {
        return std::find(path_flags.begin(), path_flags.end(), a) != path_flags.end();
    };
    std::vector<std::string> out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const auto& a = args[i];
        const auto eq = a.find('=');
        if (a.starts_with("--") && eq != std::string::npos && is_path_flag(a.substr(0, eq))) {
            out.push_back(a.substr(0, eq + 1) + fs::absolute(a.substr(eq + 1)).string());
        } else if (is_path_flag(a) && i + 1 < args.size()) {
            out.push_back(a);
            out.push_back(fs::absolute(args[++i]).string());
        } else {
            out.push_back(a);
        }
    }
    return out;
}

void write_manifest(const fs::path& path, const std::string& command, const std::vector<std::string>& args,
                    const Options& o, std::chrono::system_clock::time_point started) {
    Json m;
    m["command"] = command;
    m["args"] = portable_args(args);
    m["config"] = config_json(o);
    m["version"] = kVersion;
    m["started_at"] = utc_timestamp(started);
    m["finished_at"] = utc_timestamp(std::chrono::system_clock::now());
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << m.dump(2) << '\n';
}

fs::path manifest_path(const Options& o, const fs::path& dir, const std::string& command) {
    if (!o.manifest.empty()) return o.manifest;
    return dir / (command + ".manifest.json");
}

HeteroGraph load_built_graph(const fs::path& dir) {
    auto g = load_graph(snapshot_paths(dir));
    build_mappings(g);
    return g;
}

Json counts_json(const HeteroGraph& g, const FeatureTable* f) {
    Json c;
    c["news"] = g.news_count();
    c["authors"] = g.author_count();
    c["subjects"] = g.subjects.size();
    c["sources"] = g.sources.size();
    c["author_news_links"] = g.link_count(Relation::AuthorNews);
    c["news_news_links"] = g.link_count(Relation::NewsNews);
    c["author_author_links"] = g.link_count(Relation::AuthorAuthor);
    if (f) {
        c["feature_rows"] = f->size();
        c["feature_dim"] = f->dim();
    }
    return c;
}

void print_counts(const Json& counts, bool json, std::ostream& out) {
    if (json) {
        out << counts.dump() << '\n';
        return;
    }
    for (const auto& [k, v] : counts.items()) out << k << '=' << v.dump() << '\n';
}

// -----------------------------------------------------------------------------
// Commands
// -----------------------------------------------------------------------------

fs::path cmd_build(const Options& o, std::ostream& out) {
    GraphPaths paths;
    if (!o.input.empty()) paths = snapshot_paths(o.input);
    if (!o.news.empty()) paths.news = o.news;
    if (!o.authors.empty()) paths.authors = o.authors;
    if (!o.subjects.empty()) paths.subjects = o.subjects;
    if (!o.sources.empty()) paths.sources = o.sources;
    for (const auto* p : {&paths.news, &paths.authors, &paths.subjects, &paths.sources}) {
        if (p->empty()) throw std::invalid_argument("build needs --input or all of --news, --authors, --subjects, --sources");
    }

    auto g = load_graph(paths);
    build_mappings(g);

    std::optional<FeatureTable> features;
    if (!o.features.empty()) {
        features = read_features(o.features);
    } else if (!o.words.empty()) {
        TextGraphOptions t;
        t.window = o.q;
        t.pagerank.alpha = o.alpha;
        t.pagerank.tol = o.tol;
        features = aggregate_word_embeddings(read_word_embeddings(o.words), t);
    }

    const fs::path dir = o.out;
    write_graph_snapshot(g, dir);
    if (features) write_features(*features, dir / "features.tsv");
    print_counts(counts_json(g, features ? &*features : nullptr), o.json, out);
    return dir;
}

fs::path cmd_train(const Options& o, std::ostream& out) {
    const auto cfg = experiment_config(o);
    const fs::path dir = o.data;
    const auto g = load_built_graph(dir);
    const auto features = read_features(dir / "features.tsv");
    const auto cv = cross_validate(g, features, cfg);

    if (o.json) {
        Json j;
        j["scheme"] = o.scheme;
        j["folds"] = Json::array();
        for (const auto& f : cv.folds) {
            auto r = Json::parse(f.report.to_json());
            r["epochs"] = f.history.loss.size();
            r["stopped_early"] = f.history.stopped_early;
            j["folds"].push_back(r);
        }
        j["mean"] = Json::parse(cv.mean.to_json());
        out << j.dump() << '\n';
    } else {
        for (const auto& f : cv.folds) {
            out << f.report.to_key_value() << " epochs=" << f.history.loss.size()
                << " stopped_early=" << (f.history.stopped_early ? "true" : "false") << '\n';
        }
        out << cv.mean.to_key_value() << '\n';
    }
    return dir;
}

fs::path cmd_bench_update(const Options& o, std::ostream& out) {
    const auto cfg = experiment_config(o);
    const fs::path dir = o.data;
    const auto g = load_built_graph(dir);
    const auto updates = read_updates(o.updates, g);
    DynamicPropagation dyn(g, cfg);

    Json rows = Json::array();
    if (!o.json) {
        out << "step\top\trelation\tsrc\tdst\tchanged\tpushout_seconds\trecompute_seconds\tspeedup\tmax_row_l1\n";
    }
    for (std::size_t i = 0; i < updates.size(); ++i) {
        const auto& u = updates[i];
        const auto r = dyn.apply(u);
        const bool src_author = u.relation != Relation::NewsNews;
        const bool dst_author = u.relation == Relation::AuthorAuthor;
        const auto& src = src_author ? g.authors[u.src].id : g.news[u.src].id;
        const auto& dst = dst_author ? g.authors[u.dst].id : g.news[u.dst].id;
        const double speedup = r.pushout_seconds > 0.0 ? r.recompute_seconds / r.pushout_seconds : 0.0;
        if (o.json) {
            Json row;
            row["step"] = i + 1;
            row["op"] = u.insert ? "+" : "-";
            row["relation"] = std::string(to_string(u.relation));
            row["src"] = src;
            row["dst"] = dst;
            row["changed"] = r.changed_columns;
            row["pushout_seconds"] = r.pushout_seconds;
            row["recompute_seconds"] = r.recompute_seconds;
            row["speedup"] = speedup;
            row["max_row_l1"] = r.max_row_l1;
            rows.push_back(row);
        } else {
            out << i + 1 << '\t' << (u.insert ? '+' : '-') << '\t' << to_string(u.relation) << '\t' << src << '\t'
                << dst << '\t' << r.changed_columns << '\t' << tsv::format_double(r.pushout_seconds) << '\t'
                << tsv::format_double(r.recompute_seconds) << '\t' << tsv::format_double(speedup) << '\t'
                << tsv::format_double(r.max_row_l1) << '\n';
        }
    }
    if (o.json) out << rows.dump() << '\n';
    return dir;
}

fs::path cmd_synth(const Options& o, std::ostream& out) {
    const auto corpus = make_synthetic_corpus(o.synth);
    write_corpus(corpus, o.out);
    print_counts(counts_json(corpus.graph, &corpus.features), o.json, out);
    return o.out;
}

int run_replay(const Options& o, std::ostream& out, std::ostream& err) {
    std::ifstream in(o.replay);
    if (!in) throw DataError("cannot open " + o.replay);
    Json m;
    try {
        m = Json::parse(in);
    } catch (const Json::exception& e) {
        throw DataError(o.replay + ": not a run manifest (" + e.what() + ")");
    }
    if (!m.contains("args") || !m["args"].is_array()) throw DataError(o.replay + ": manifest has no args");
    const auto args = m["args"].get<std::vector<std::string>>();
    if (!args.empty() && args.front() == "replay") throw DataError(o.replay + ": manifest replays itself");
    return run(args, out, err);
}

void add_propagation_flags(CLI::App* c, Options& o) {
    c->add_option("--alpha", o.alpha, "Probability of following an edge")->capture_default_str();
    c->add_option("--tol", o.tol, "L1 truncation bound of the power series")->capture_default_str();
    c->add_option("--threads", o.threads, "Worker threads for propagation rows")->capture_default_str();
}

void add_model_flags(CLI::App* c, Options& o) {
    add_propagation_flags(c, o);
    c->add_option("--scheme", o.scheme, "dbgnn or dhgnn")->capture_default_str();
    c->add_option("--betas", o.betas, "Mixing weights an,nn,aa (default 1/3 each)");
    c->add_option("--rows", o.rows, "Propagation rows: labeled or all")->capture_default_str();
    c->add_option("--folds", o.folds, "Cross-validation folds")->capture_default_str();
    c->add_option("--seed", o.seed, "Root random seed")->capture_default_str();
    c->add_option("--hidden", o.hidden, "Hidden width")->capture_default_str();
    c->add_option("--lr", o.lr, "Learning rate")->capture_default_str();
    c->add_option("--max-epochs", o.max_epochs, "Epoch cap")->capture_default_str();
    c->add_option("--patience", o.patience, "Epochs without improvement before stopping")->capture_default_str();
    c->add_option("--data", o.data, "Directory written by build")->required();
}

void add_output_flags(CLI::App* c, Options& o) {
    c->add_flag("--json", o.json, "Machine-readable output");
    c->add_option("--manifest", o.manifest, "Where to write the run manifest");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Dynamic propagation over news-author graphs"};
    app.name("dynprop");
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    auto* build = app.add_subcommand("build", "Load a corpus, build its graph and features");
    build->add_option("--input", o.input, "Directory holding news.tsv, authors.tsv, subjects.tsv, sources.tsv");
    build->add_option("--news", o.news, "news.tsv");
    build->add_option("--authors", o.authors, "authors.tsv");
    build->add_option("--subjects", o.subjects, "subjects.tsv");
    build->add_option("--sources", o.sources, "sources.tsv");
    auto* feat = build->add_option("--features", o.features, "Feature vectors per node");
    auto* words = build->add_option("--words", o.words, "Word embeddings to aggregate per node");
    feat->excludes(words);
    build->add_option("--q", o.q, "Word graph window")->capture_default_str();
    add_propagation_flags(build, o);
    build->add_option("--out", o.out, "Output directory")->required();
    add_output_flags(build, o);

    auto* train = app.add_subcommand("train", "Cross-validate a model on a built corpus");
    add_model_flags(train, o);
    add_output_flags(train, o);

    auto* bench = app.add_subcommand("bench-update", "Time push-out updates against recomputation");
    add_model_flags(bench, o);
    bench->add_option("--updates", o.updates, "updates.tsv")->required();
    add_output_flags(bench, o);

    auto* synth = app.add_subcommand("synth", "Write a synthetic two-community corpus");
    synth->add_option("--out", o.out, "Output directory")->required();
    synth->add_option("--news", o.synth.news, "News items")->capture_default_str();
    synth->add_option("--authors", o.synth.authors, "Authors")->capture_default_str();
    synth->add_option("--dim", o.synth.dim, "Feature dimension")->capture_default_str();
    synth->add_option("--separation", o.synth.separation, "Community mean per feature")->capture_default_str();
    synth->add_option("--subject-noise", o.synth.subject_noise, "Chance of the other community's subject")
        ->capture_default_str();
    synth->add_option("--label-noise", o.synth.label_noise, "Chance of a flipped label")->capture_default_str();
    synth->add_option("--seed", o.synth.seed, "Random seed")->capture_default_str();
    add_output_flags(synth, o);

    auto* replay = app.add_subcommand("replay", "Rerun the command recorded in a manifest");
    replay->add_option("manifest", o.replay, "Run manifest")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (replay->parsed()) return run_replay(o, out, err);

        const auto started = std::chrono::system_clock::now();
        std::string name;
        fs::path dir;
        if (build->parsed()) {
            name = "build";
            dir = cmd_build(o, out);
        } else if (train->parsed()) {
            name = "train";
            dir = cmd_train(o, out);
        } else if (bench->parsed()) {
            name = "bench-update";
            dir = cmd_bench_update(o, out);
        } else {
            name = "synth";
            dir = cmd_synth(o, out);
        }
        write_manifest(manifest_path(o, dir, name), name, args, o, started);
        return kOk;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kNotConverged;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
}

}  // namespace dynprop::cli
