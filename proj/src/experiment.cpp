#include "dynprop/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "dynprop/errors.hpp"
#include "dynprop/rng.hpp"
#include "dynprop/tsv.hpp"

namespace dynprop {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Seeds of `combined` that fall in [offset, offset + count), shifted to local positions.
std::vector<Index> local_seeds(const std::vector<Index>& combined, Index offset, Index count) {
    std::vector<Index> out;
    for (Index s : combined) {
        if (s >= offset && s < offset + count) out.push_back(s - offset);
    }
    return out;
}

std::vector<Edge> homogeneous_edges(const std::vector<Edge>& both_orientations) {
    std::vector<Edge> out;
    for (const auto& [u, v] : both_orientations) {
        if (u < v) out.emplace_back(u, v);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

std::string_view to_string(ModelKind k) {
    return k == ModelKind::Dbgnn ? "dbgnn" : "dhgnn";
}

ModelKind parse_model_kind(std::string_view s) {
    if (s == "dbgnn") return ModelKind::Dbgnn;
    if (s == "dhgnn") return ModelKind::Dhgnn;
    throw std::invalid_argument("unknown scheme '" + std::string(s) + "' (expected dbgnn or dhgnn)");
}

std::string_view to_string(RowMode m) {
    return m == RowMode::Labeled ? "labeled" : "all";
}

RowMode parse_row_mode(std::string_view s) {
    if (s == "labeled") return RowMode::Labeled;
    if (s == "all") return RowMode::All;
    throw std::invalid_argument("unknown row mode '" + std::string(s) + "' (expected labeled or all)");
}

void ExperimentConfig::validate() const {
    dynprop::validate(cpi);
    betas.validate();
    train.validate();
    if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

std::vector<Index> propagation_seeds(const HeteroGraph& g, RowMode mode) {
    if (mode == RowMode::All) return all_seeds(g.node_count());
    std::vector<Index> seeds = all_seeds(g.news_count());
    std::vector<bool> has_news(g.author_count(), false);
    for (const auto& [a, n] : g.edges_an) has_news[a] = true;
    for (Index a = 0; a < g.author_count(); ++a) {
        if (has_news[a]) seeds.push_back(g.combined_author_index(a));
    }
    return seeds;
}

PropagationMatrix build_propagation(const HeteroGraph& g, const ExperimentConfig& cfg) {
    cfg.validate();
    const auto seeds = propagation_seeds(g, cfg.rows);
    auto p_an = bipartite_two_hop_propagation(relation_adjacency(g, Relation::AuthorNews),
                                              g.news_count(), cfg.cpi, seeds, cfg.threads);
    if (cfg.model == ModelKind::Dbgnn) return p_an;

    // A zero weight contributes exact zeros, so its component is not computed.
    const auto homogeneous = [&](Relation r, double beta, Index offset, Index count) {
        auto local = local_seeds(seeds, offset, count);
        if (beta == 0.0) {
            return PropagationMatrix::identity(count, std::move(local), cfg.cpi.alpha, Scheme::OneHop);
        }
        return full_propagation(column_normalize(relation_adjacency(g, r)), cfg.cpi, std::move(local),
                                Scheme::OneHop, cfg.threads);
    };
    const auto p_nn = homogeneous(Relation::NewsNews, cfg.betas.beta_nn, 0, g.news_count());
    const auto p_aa = homogeneous(Relation::AuthorAuthor, cfg.betas.beta_aa, g.news_count(),
                                  g.author_count());
    return mixed_propagation(p_an, p_nn, p_aa, cfg.betas);
}

Matrix feature_matrix(const HeteroGraph& g, const FeatureTable& features) {
    Matrix x(g.node_count(), features.dim());
    const auto fill = [&](Index row, NodeType type, const std::string& id) {
        const auto* v = features.find(type, id);
        if (!v) {
            throw DataError("no feature vector for " + std::string(to_string(type)) + " '" + id + "'");
        }
        std::copy(v->begin(), v->end(), x.row(row).begin());
    };
    for (Index n = 0; n < g.news_count(); ++n) fill(n, NodeType::News, g.news[n].id);
    for (Index a = 0; a < g.author_count(); ++a) {
        fill(g.combined_author_index(a), NodeType::Author, g.authors[a].id);
    }
    return x;
}

CrossValidation cross_validate(const HeteroGraph& g, const FeatureTable& features,
                               const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<Index> labeled;
    for (Index n = 0; n < g.news_count(); ++n) {
        if (g.news[n].label) labeled.push_back(n);
    }
    if (labeled.size() < cfg.train.folds) {
        throw DataError(std::to_string(labeled.size()) + " labeled news items cannot fill " +
                        std::to_string(cfg.train.folds) + " folds");
    }
    const Matrix x = feature_matrix(g, features);

    CrossValidation cv;
    const auto start = Clock::now();
    const auto p = build_propagation(g, cfg);
    cv.propagation_seconds = seconds_since(start);

    const auto folds = kfold_split(labeled.size(), cfg.train.folds, derive_seed(cfg.train.seed, "split"));
    const auto init_root = derive_seed(cfg.train.seed, "init");
    std::vector<MetricsReport> reports;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<bool> train_mask(g.news_count(), false);
        for (Index n : labeled) train_mask[n] = true;
        for (Index k : folds[f]) train_mask[labeled[k]] = false;

        HeteroGraph fold_graph = g;
        derive_author_labels(fold_graph, &train_mask);

        Supervision s;
        for (Index n : labeled) {
            if (!train_mask[n]) continue;
            s.rows.push_back(*p.row_of(n));
            s.targets.push_back(static_cast<double>(static_cast<int>(*g.news[n].label)));
        }
        for (Index a = 0; a < g.author_count(); ++a) {
            const auto& label = fold_graph.authors[a].derived_label;
            const auto row = p.row_of(g.combined_author_index(a));
            if (!label || !row) continue;
            s.rows.push_back(*row);
            s.targets.push_back(*label);
        }

        auto trained = fit(x, p, s, cfg.train, derive_seed(init_root, static_cast<std::uint64_t>(f)));
        const auto q = predict(p, forward(trained.classifier, x));
        std::vector<double> scores;
        std::vector<int> truth;
        for (Index k : folds[f]) {
            const Index n = labeled[k];
            scores.push_back(q(*p.row_of(n), 1));
            truth.push_back(static_cast<int>(*g.news[n].label));
        }
        FoldOutcome outcome{evaluate(scores, truth), std::move(trained.history)};
        outcome.report.fold = static_cast<int>(f);
        outcome.report.train_seconds = cv.propagation_seconds + outcome.history.seconds;
        reports.push_back(outcome.report);
        cv.folds.push_back(std::move(outcome));
    }
    cv.mean = mean_report(reports);
    return cv;
}

// -----------------------------------------------------------------------------
// DynamicPropagation
// -----------------------------------------------------------------------------

DynamicPropagation::DynamicPropagation(const HeteroGraph& g, const ExperimentConfig& cfg)
    : cfg_(cfg), news_count_(g.news_count()), author_count_(g.author_count()) {
    cfg_.validate();
    const auto seeds = propagation_seeds(g, cfg_.rows);

    auto add = [&](Relation r, std::vector<Edge> edges, std::vector<Index> rows, Scheme scheme,
                   bool active) {
        Component c{r, std::move(edges), column_normalize(SparseMatrix::identity(0)), {}, active};
        c.m = transition(c);
        c.p = active ? full_propagation(c.m, cfg_.cpi, std::move(rows), scheme, cfg_.threads)
                     : PropagationMatrix::identity(c.m.size(), std::move(rows), cfg_.cpi.alpha, scheme);
        components_.push_back(std::move(c));
    };
    auto an = g.edges_an;
    std::sort(an.begin(), an.end());
    an.erase(std::unique(an.begin(), an.end()), an.end());
    add(Relation::AuthorNews, std::move(an), seeds, Scheme::TwoHop, true);
    if (cfg_.model == ModelKind::Dhgnn) {
        add(Relation::NewsNews, homogeneous_edges(g.edges_nn), local_seeds(seeds, 0, news_count_),
            Scheme::OneHop, cfg_.betas.beta_nn != 0.0);
        add(Relation::AuthorAuthor, homogeneous_edges(g.edges_aa),
            local_seeds(seeds, news_count_, author_count_), Scheme::OneHop, cfg_.betas.beta_aa != 0.0);
    }
}

StochasticMatrix DynamicPropagation::transition(const Component& c) const {
    const auto adj = relation_adjacency(news_count_, author_count_, c.relation, c.edges);
    if (c.relation == Relation::AuthorNews) return bipartite_two_hop_matrix(adj, news_count_);
    return column_normalize(adj);
}

DynamicPropagation::Component& DynamicPropagation::component(Relation r) {
    for (auto& c : components_) {
        if (c.relation == r) return c;
    }
    throw std::invalid_argument("relation " + std::string(to_string(r)) + " is not tracked");
}

std::size_t DynamicPropagation::edge_count(Relation r) const {
    for (const auto& c : components_) {
        if (c.relation == r) return c.edges.size();
    }
    return 0;
}

UpdateReport DynamicPropagation::apply(const EdgeUpdate& u) {
    const bool an = u.relation == Relation::AuthorNews;
    const Index src_limit = an || u.relation == Relation::AuthorAuthor ? author_count_ : news_count_;
    const Index dst_limit = u.relation == Relation::AuthorAuthor ? author_count_ : news_count_;
    if (u.src >= src_limit || u.dst >= dst_limit) {
        throw std::out_of_range("edge update endpoint out of range");
    }
    if (!an && u.src == u.dst) throw std::invalid_argument("edge update is a self loop");

    UpdateReport report;
    // dbgnn ignores homogeneous links, and a zero-weight component never reaches the output.
    if (cfg_.model == ModelKind::Dbgnn && !an) return report;
    auto& c = component(u.relation);

    const Edge e = an ? Edge{u.src, u.dst} : Edge{std::min(u.src, u.dst), std::max(u.src, u.dst)};
    const auto it = std::lower_bound(c.edges.begin(), c.edges.end(), e);
    const bool present = it != c.edges.end() && *it == e;
    if (u.insert == present) return report;
    if (u.insert) {
        c.edges.insert(it, e);
    } else {
        c.edges.erase(it);
    }
    if (!c.active) return report;

    auto m_new = transition(c);
    report.changed_columns = changed_columns(c.m.matrix(), m_new.matrix()).size();

    auto start = Clock::now();
    auto pushed = pushout_update(c.p, c.m, m_new, cfg_.cpi, cfg_.threads);
    report.pushout_seconds = seconds_since(start);

    start = Clock::now();
    const auto fresh = full_propagation(m_new, cfg_.cpi, c.p.seeds(), c.p.scheme(), cfg_.threads);
    report.recompute_seconds = seconds_since(start);

    report.max_row_l1 = max_row_l1_distance(pushed, fresh);
    c.p = std::move(pushed);
    c.m = std::move(m_new);
    return report;
}

PropagationMatrix DynamicPropagation::current() const {
    if (cfg_.model == ModelKind::Dbgnn) return components_[0].p;
    return mixed_propagation(components_[0].p, components_[1].p, components_[2].p, cfg_.betas);
}

std::vector<EdgeUpdate> read_updates(const std::filesystem::path& path, const HeteroGraph& g) {
    std::vector<EdgeUpdate> out;
    tsv::Reader in(path);
    while (in.next()) {
        in.expect_fields(4);
        const auto& f = in.fields();
        EdgeUpdate u;
        if (f[0] == "+") {
            u.insert = true;
        } else if (f[0] == "-") {
            u.insert = false;
        } else {
            in.fail("operation must be + or -, got '" + std::string(f[0]) + "'");
        }
        try {
            u.relation = parse_relation(f[1]);
        } catch (const std::invalid_argument& e) {
            in.fail(e.what());
        }
        const auto resolve = [&](std::string_view id, bool author) {
            const auto pos = author ? g.find_author(id) : g.find_news(id);
            if (!pos) in.fail(std::string("unknown ") + (author ? "author" : "news") + " '" + std::string(id) + "'");
            return *pos;
        };
        const bool src_author = u.relation != Relation::NewsNews;
        const bool dst_author = u.relation == Relation::AuthorAuthor;
        u.src = resolve(f[2], src_author);
        u.dst = resolve(f[3], dst_author);
        if (u.relation != Relation::AuthorNews && u.src == u.dst) in.fail("self loop");
        out.push_back(u);
    }
    return out;
}

// -----------------------------------------------------------------------------
// Synthetic corpus
// -----------------------------------------------------------------------------

SynthCorpus make_synthetic_corpus(const SynthConfig& cfg) {
    if (cfg.authors < 2 || cfg.news < 1 || cfg.dim < 1) {
        throw std::invalid_argument("synthetic corpus needs at least 2 authors, 1 news item and 1 feature");
    }
    Rng rng(cfg.seed);
    SynthCorpus out;
    auto& g = out.graph;
    out.features = FeatureTable(cfg.dim);

    const char* names[2] = {"real", "fake"};
    for (int c = 0; c < 2; ++c) {
        g.sources.push_back({"s" + std::to_string(c), std::string(names[c]) + " desk"});
        g.subjects.push_back({"t" + std::to_string(c), std::string(names[c]) + " topic"});
    }
    const auto features = [&](int community) {
        std::vector<double> v(cfg.dim);
        const double mean = community == 0 ? cfg.separation : -cfg.separation;
        for (auto& x : v) x = mean + rng.normal();
        return v;
    };
    const auto id = [](char prefix, std::size_t i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%c%04zu", prefix, i);
        return std::string(buf);
    };

    for (std::size_t a = 0; a < cfg.authors; ++a) {
        const int community = static_cast<int>(a % 2);
        g.authors.push_back({id('a', a), g.sources[community].id, std::nullopt});
        out.features.insert(NodeType::Author, g.authors.back().id, features(community));
    }
    for (std::size_t n = 0; n < cfg.news; ++n) {
        const std::size_t author = rng.below(cfg.authors);
        const int community = static_cast<int>(author % 2);
        const int subject = rng.uniform() < cfg.subject_noise ? 1 - community : community;
        bool real = community == 0;
        if (rng.uniform() < cfg.label_noise) real = !real;
        g.news.push_back({id('n', n), real ? Label::Real : Label::Fake, {g.subjects[subject].id},
                          g.authors[author].id});
        out.features.insert(NodeType::News, g.news.back().id, features(community));
    }
    build_mappings(g);
    return out;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
    write_graph_snapshot(corpus.graph, dir);
    write_features(corpus.features, dir / "features.tsv");
}

}  // namespace dynprop
