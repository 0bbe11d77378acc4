// Acceptance suite: one PASS/WARN/FAIL line per criterion. Exits non-zero if
// any criterion fails; WARN does not fail the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "checks.hpp"
#include "dynprop/experiment.hpp"
#include "dynprop/model.hpp"
#include "dynprop/propagate.hpp"
#include "dynprop/rng.hpp"
#include "oracle.hpp"

using namespace dynprop;

namespace {

using Clock = std::chrono::steady_clock;

enum class Status { Pass, Warn, Fail };

struct Outcome {
    Status status;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double row_l1(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

// ---------------------------------------------------------------------------
// PPR oracle
// ---------------------------------------------------------------------------

Outcome ppr_oracle() {
    Rng rng(derive_seed(2024, "ppr-oracle"));
    double worst = 0.0;
    const auto start = Clock::now();
    for (int graph = 0; graph < 50; ++graph) {
        const std::size_t n = 1 + rng.below(50);
        const auto edges = oracle::random_graph(rng, n, 0.2);
        const auto m = column_normalize(oracle::sparse_adjacency(n, edges));
        const auto dense = oracle::dense_column_stochastic(oracle::dense_adjacency(n, edges));
        for (double alpha : {0.1, 0.5, 0.85}) {
            const auto p = full_propagation(m, {alpha, 1e-9});
            const auto expect = oracle::dense_rwr(dense, alpha);
            for (Index i = 0; i < n; ++i) {
                for (Index j = 0; j < n; ++j) {
                    worst = std::max(worst, std::abs(p.at(i, j) - expect(static_cast<Eigen::Index>(j),
                                                                        static_cast<Eigen::Index>(i))));
                }
            }
        }
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const bool ok = worst <= 1e-8 && secs < 10.0;
    return {ok ? Status::Pass : Status::Fail,
            "50 graphs x 3 alphas, max Linf " + fmt("%.3g", worst) + " (bound 1e-8), " + fmt("%.2f", secs) +
                " s (bound 10 s)"};
}

// ---------------------------------------------------------------------------
// Update exactness and stochasticity over random bipartite graphs
// ---------------------------------------------------------------------------

struct UpdateStats {
    double worst_l1[3] = {0.0, 0.0, 0.0};  // 1-hop, 2-hop, mixed
    double worst_row_sum = 0.0;            // max |row sum - 1|
    double most_negative = 0.0;
    double worst_col_sum = 0.0;            // max |column sum - 1| of any transition matrix
    double opposite_mass = 0.0;            // largest 2-hop mass on the seed's opposite side
    double seconds = 0.0;
};

using EdgeSet = std::set<std::pair<Index, Index>>;

void toggle(EdgeSet& s, Index u, Index v) {
    const std::pair<Index, Index> e{std::min(u, v), std::max(u, v)};
    if (!s.erase(e)) s.insert(e);
}

SparseMatrix adjacency(Index n, const EdgeSet& s) {
    return oracle::sparse_adjacency(n, oracle::Edges(s.begin(), s.end()));
}

void record_distribution(UpdateStats& st, const PropagationMatrix& p) {
    for (Index r = 0; r < p.row_count(); ++r) {
        double sum = 0.0;
        for (double v : p.row(r)) {
            st.most_negative = std::min(st.most_negative, v);
            sum += v;
        }
        st.worst_row_sum = std::max(st.worst_row_sum, std::abs(sum - 1.0));
    }
}

void record_columns(UpdateStats& st, const StochasticMatrix& m) {
    for (Index j = 0; j < m.size(); ++j) {
        st.worst_col_sum = std::max(st.worst_col_sum, std::abs(m.matrix().column_sum(j) - 1.0));
    }
}

void record_sides(UpdateStats& st, const PropagationMatrix& p, Index news) {
    for (Index r = 0; r < p.row_count(); ++r) {
        const bool seed_is_news = p.seeds()[r] < news;
        const auto row = p.row(r);
        for (Index c = 0; c < row.size(); ++c) {
            if ((c < news) != seed_is_news) st.opposite_mass = std::max(st.opposite_mass, row[c]);
        }
    }
}

double max_row_l1(const PropagationMatrix& a, const PropagationMatrix& b) {
    double worst = 0.0;
    for (Index r = 0; r < a.row_count(); ++r) worst = std::max(worst, row_l1(a.row(r), b.row(r)));
    return worst;
}

UpdateStats run_update_sequences() {
    UpdateStats st;
    const CpiOptions opts{0.85, 1e-9};
    Rng rng(derive_seed(2024, "updates"));
    const auto start = Clock::now();
    for (int graph = 0; graph < 20; ++graph) {
        const Index news = 1 + rng.below(60);
        const Index authors = 1 + rng.below(100 - news);
        const Index n = news + authors;
        EdgeSet an, nn, aa;
        for (auto [u, v] : oracle::random_bipartite(rng, news, authors, 0.1)) an.insert({u, v});
        for (auto [u, v] : oracle::random_graph(rng, news, 0.1)) nn.insert({u, v});
        for (auto [u, v] : oracle::random_graph(rng, authors, 0.1)) aa.insert({u, v});

        const auto random_an = [&] { return std::pair<Index, Index>{rng.below(news), news + rng.below(authors)}; };

        // 1-hop and 2-hop: ten authorship toggles.
        {
            auto m1 = column_normalize(adjacency(n, an));
            auto m2 = bipartite_two_hop_matrix(adjacency(n, an), news);
            auto p1 = full_propagation(m1, opts, Scheme::OneHop);
            auto p2 = full_propagation(m2, opts, Scheme::TwoHop);
            EdgeSet edges = an;
            for (int step = 0; step < 10; ++step) {
                const auto [u, v] = random_an();
                toggle(edges, u, v);
                const auto adj = adjacency(n, edges);
                const auto m1_new = column_normalize(adj);
                const auto m2_new = bipartite_two_hop_matrix(adj, news);
                p1 = pushout_update(p1, m1, m1_new, opts);
                p2 = pushout_update(p2, m2, m2_new, opts);
                m1 = m1_new;
                m2 = m2_new;
                st.worst_l1[0] = std::max(st.worst_l1[0], max_row_l1(p1, full_propagation(m1, opts, Scheme::OneHop)));
                st.worst_l1[1] = std::max(st.worst_l1[1], max_row_l1(p2, full_propagation(m2, opts, Scheme::TwoHop)));
                record_distribution(st, p1);
                record_distribution(st, p2);
                record_columns(st, m1);
                record_columns(st, m2);
                record_sides(st, p2, news);
            }
        }

        // Mixed: ten toggles spread over the three relations.
        {
            const MixedWeights w;
            auto m_an = bipartite_two_hop_matrix(adjacency(n, an), news);
            auto m_nn = column_normalize(adjacency(news, nn));
            auto m_aa = column_normalize(adjacency(authors, aa));
            auto p_an = full_propagation(m_an, opts, Scheme::TwoHop);
            auto p_nn = full_propagation(m_nn, opts, Scheme::OneHop);
            auto p_aa = full_propagation(m_aa, opts, Scheme::OneHop);
            for (int step = 0; step < 10; ++step) {
                const auto which = rng.below(3);
                if (which == 0) {
                    const auto [u, v] = random_an();
                    toggle(an, u, v);
                    const auto m_new = bipartite_two_hop_matrix(adjacency(n, an), news);
                    p_an = pushout_update(p_an, m_an, m_new, opts);
                    m_an = m_new;
                } else if (which == 1 && news > 1) {
                    const Index u = rng.below(news);
                    const Index v = (u + 1 + rng.below(news - 1)) % news;
                    toggle(nn, u, v);
                    const auto m_new = column_normalize(adjacency(news, nn));
                    p_nn = pushout_update(p_nn, m_nn, m_new, opts);
                    m_nn = m_new;
                } else if (which == 2 && authors > 1) {
                    const Index u = rng.below(authors);
                    const Index v = (u + 1 + rng.below(authors - 1)) % authors;
                    toggle(aa, u, v);
                    const auto m_new = column_normalize(adjacency(authors, aa));
                    p_aa = pushout_update(p_aa, m_aa, m_new, opts);
                    m_aa = m_new;
                }
                const auto mixed = mixed_propagation(p_an, p_nn, p_aa, w);
                const auto fresh = mixed_propagation(full_propagation(m_an, opts, Scheme::TwoHop),
                                                     full_propagation(m_nn, opts, Scheme::OneHop),
                                                     full_propagation(m_aa, opts, Scheme::OneHop), w);
                st.worst_l1[2] = std::max(st.worst_l1[2], max_row_l1(mixed, fresh));
                record_distribution(st, mixed);
                record_distribution(st, p_nn);
                record_distribution(st, p_aa);
                record_columns(st, m_an);
                record_columns(st, m_nn);
                record_columns(st, m_aa);
                record_sides(st, p_an, news);
            }
        }
    }
    st.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return st;
}

Outcome update_exactness(const UpdateStats& st) {
    const double worst = std::max({st.worst_l1[0], st.worst_l1[1], st.worst_l1[2]});
    const bool ok = worst <= 1e-7 && st.seconds < 60.0;
    return {ok ? Status::Pass : Status::Fail,
            "20 graphs x 10 updates, max row L1 1-hop " + fmt("%.3g", st.worst_l1[0]) + ", 2-hop " +
                fmt("%.3g", st.worst_l1[1]) + ", mixed " + fmt("%.3g", st.worst_l1[2]) + " (bound 1e-7), " +
                fmt("%.2f", st.seconds) + " s (bound 60 s)"};
}

Outcome stochasticity(const UpdateStats& st) {
    const bool ok = st.worst_row_sum <= 1e-9 && st.most_negative >= 0.0 && st.worst_col_sum <= 1e-12 &&
                    st.opposite_mass == 0.0;
    return {ok ? Status::Pass : Status::Fail,
            "max |row sum - 1| " + fmt("%.3g", st.worst_row_sum) + " (bound 1e-9), min entry " +
                fmt("%.3g", st.most_negative) + ", max |column sum - 1| " + fmt("%.3g", st.worst_col_sum) +
                " (bound 1e-12), 2-hop opposite-side mass " + fmt("%.3g", st.opposite_mass)};
}

// ---------------------------------------------------------------------------
// Speedup
// ---------------------------------------------------------------------------

Outcome speedup() {
    constexpr Index kNews = 5000, kAuthors = 5000, kEdges = 25000, kRows = 256;
    const CpiOptions opts{0.85, 1e-9};
    Rng rng(derive_seed(2024, "speedup"));
    EdgeSet edges;
    while (edges.size() < kEdges) edges.insert({rng.below(kNews), kNews + rng.below(kAuthors)});

    std::set<Index> seed_set;
    while (seed_set.size() < kRows) seed_set.insert(rng.below(kNews + kAuthors));
    const std::vector<Index> seeds(seed_set.begin(), seed_set.end());

    const Index n = kNews + kAuthors;
    const auto m = bipartite_two_hop_matrix(adjacency(n, edges), kNews);
    const auto p = full_propagation(m, opts, seeds, Scheme::TwoHop);

    std::vector<double> ratios;
    double worst_l1 = 0.0;
    std::string detail;
    for (int trial = 0; trial < 3; ++trial) {
        EdgeSet grown = edges;
        while (grown.size() == edges.size()) grown.insert({rng.below(kNews), kNews + rng.below(kAuthors)});
        const auto m_new = bipartite_two_hop_matrix(adjacency(n, grown), kNews);

        auto t = Clock::now();
        const auto pushed = pushout_update(p, m, m_new, opts);
        const double push_s = std::chrono::duration<double>(Clock::now() - t).count();
        t = Clock::now();
        const auto fresh = full_propagation(m_new, opts, seeds, Scheme::TwoHop);
        const double full_s = std::chrono::duration<double>(Clock::now() - t).count();

        worst_l1 = std::max(worst_l1, max_row_l1(pushed, fresh));
        ratios.push_back(full_s / push_s);
        detail += (trial ? ", " : "") + fmt("%.4f", push_s) + " s vs " + fmt("%.3f", full_s) + " s";
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[1];
    const Status s = worst_l1 > 1e-7 ? Status::Fail
                     : median >= 5.0 ? Status::Pass
                     : median >= 2.0 ? Status::Warn
                                     : Status::Fail;
    return {s, "10000 nodes, 25000 edges, 2-hop, " + std::to_string(kRows) + " rows, 3 insertions (" + detail +
                   "), median ratio " + fmt("%.1f", median) + "x (bound 5x, warn above 2x), max row L1 " +
                   fmt("%.3g", worst_l1)};
}

// ---------------------------------------------------------------------------
// Model criteria
// ---------------------------------------------------------------------------

Outcome gradient_check() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        worst = std::max(worst, checks::gradient_relative_error(checks::gradient_instance(derive_seed(2024, seed))));
    }
    return {worst <= 1e-4 ? Status::Pass : Status::Fail,
            "20 instances (10 nodes, d = 8), max relative error " + fmt("%.3g", worst) + " (bound 1e-4)"};
}

Outcome end_to_end() {
    SynthConfig sc;
    sc.seed = 2024;
    const auto corpus = make_synthetic_corpus(sc);
    ExperimentConfig cfg;
    cfg.model = ModelKind::Dhgnn;
    cfg.train.folds = 4;
    cfg.train.learning_rate = 0.5;
    cfg.train.hidden = 16;
    cfg.train.max_epochs = 5000;
    cfg.train.seed = 2024;

    const auto a = cross_validate(corpus.graph, corpus.features, cfg);
    const auto b = cross_validate(corpus.graph, corpus.features, cfg);

    bool early = true;
    std::size_t longest = 0;
    for (const auto& f : a.folds) {
        early = early && f.history.stopped_early && f.history.loss.size() < cfg.train.max_epochs;
        longest = std::max(longest, f.history.loss.size());
    }
    bool identical = true;
    for (std::size_t f = 0; f < a.folds.size(); ++f) {
        const auto& x = a.folds[f];
        const auto& y = b.folds[f];
        identical = identical && x.history.loss == y.history.loss && x.report.accuracy == y.report.accuracy &&
                    x.report.precision == y.report.precision && x.report.recall == y.report.recall &&
                    x.report.f1 == y.report.f1 && x.report.auc == y.report.auc;
    }
    const bool ok = a.mean.accuracy >= 0.95 && early && identical;
    return {ok ? Status::Pass : Status::Fail,
            "dhgnn, 200 news / 40 authors, K = 4: mean accuracy " + fmt("%.4f", a.mean.accuracy) +
                " (bound 0.95), early stop " + (early ? "in every fold" : "missing") + " (longest " +
                std::to_string(longest) + " of " + std::to_string(cfg.train.max_epochs) + " epochs), rerun " +
                (identical ? "bit-identical" : "differs")};
}

Outcome metrics_oracle() {
    Rng rng(derive_seed(2024, "metrics"));
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(200);
        std::vector<double> s(n);
        std::vector<int> y(n);
        const bool coarse = trial % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = coarse ? static_cast<double>(rng.below(11)) / 10.0 : rng.uniform();
            y[i] = static_cast<int>(rng.below(2));
        }
        const auto r = evaluate(s, y);
        const auto c = checks::brute_force_confusion(s, y);
        const bool same = r.accuracy == c.accuracy && r.precision == c.precision && r.recall == c.recall &&
                          r.f1 == c.f1 && r.auc == checks::brute_force_auc(s, y);
        if (!same) ++mismatches;
    }
    return {mismatches == 0 ? Status::Pass : Status::Fail,
            "100 random sets of size <= 200, " + std::to_string(mismatches) + " mismatches (exact comparison)"};
}

Outcome fold_law() {
    int violations = 0, cases = 0;
    for (std::size_t n = 1; n <= 50; ++n) {
        for (std::size_t k = 1; k <= n; ++k) {
            ++cases;
            if (!checks::fold_law_holds(kfold_split(n, k, derive_seed(n, k)), n, k)) ++violations;
        }
    }
    return {violations == 0 ? Status::Pass : Status::Fail,
            std::to_string(cases) + " (n, k) pairs with k <= n <= 50, " + std::to_string(violations) + " violations"};
}

}  // namespace

int main() {
    int failures = 0;
    const auto report = [&](const char* name, const std::function<Outcome()>& run) {
        const auto start = Clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {Status::Fail, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Warn ? "WARN" : "FAIL";
        if (o.status == Status::Fail) ++failures;
        std::printf("%s %-22s %s [%.1f s]\n", tag, name, o.detail.c_str(), secs);
        std::fflush(stdout);
    };

    report("ppr-oracle", ppr_oracle);
    UpdateStats stats;
    report("update-exactness", [&] {
        stats = run_update_sequences();
        return update_exactness(stats);
    });
    report("stochasticity", [&] { return stochasticity(stats); });
    report("speedup", speedup);
    report("gradient-check", gradient_check);
    report("end-to-end", end_to_end);
    report("metrics-oracle", metrics_oracle);
    report("fold-law", fold_law);

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
