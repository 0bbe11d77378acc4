#include "dynprop/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

namespace dynprop {

namespace {

// Runs body(i) for i in [0, count) on up to `threads` workers, contiguous chunks.
template <typename Body>
void parallel_for(Index count, unsigned threads, Body&& body) {
    const Index workers = std::min<Index>(std::max(threads, 1u), count);
    if (workers <= 1) {
        for (Index i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const Index chunk = (count + workers - 1) / workers;
    for (Index w = 0; w < workers; ++w) {
        const Index begin = w * chunk;
        const Index end = std::min(count, begin + chunk);
        pool.emplace_back([begin, end, &body] {
            for (Index i = begin; i < end; ++i) body(i);
        });
    }
}

void check_same_order(const StochasticMatrix& a, const StochasticMatrix& b, Index n) {
    if (a.size() != n || b.size() != n) {
        throw std::invalid_argument("push-out: matrices of order " + std::to_string(a.size()) +
                                    " and " + std::to_string(b.size()) +
                                    " against propagation rows of length " + std::to_string(n));
    }
}

// alpha * (M'[:, c] - M[:, c]) scattered into a dense vector.
void column_delta(const StochasticMatrix& m_old, const StochasticMatrix& m_new, Index c,
                  double scale, std::vector<double>& out) {
    const auto nr = m_new.matrix().col_rows(c);
    const auto nv = m_new.matrix().col_values(c);
    for (std::size_t k = 0; k < nr.size(); ++k) out[nr[k]] += scale * nv[k];
    const auto orow = m_old.matrix().col_rows(c);
    const auto ov = m_old.matrix().col_values(c);
    for (std::size_t k = 0; k < orow.size(); ++k) out[orow[k]] -= scale * ov[k];
}

void clamp_negative(std::span<double> row) {
    for (double& x : row) {
        if (x < 0.0) x = 0.0;
    }
}

std::vector<double> pushout_row_with(std::span<const double> row, const StochasticMatrix& m_old,
                                     const StochasticMatrix& m_new,
                                     const std::vector<Index>& changed, const CpiOptions& opts) {
    std::vector<double> delta(row.size(), 0.0);
    for (Index c : changed) {
        if (row[c] != 0.0) column_delta(m_old, m_new, c, opts.alpha * row[c], delta);
    }
    std::vector<double> out(row.begin(), row.end());
    if (l1_norm(delta) == 0.0) return out;
    const auto correction = cumulative_power_iteration(m_new, delta, opts);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += correction.sum[i];
    clamp_negative(out);
    return out;
}

}  // namespace

std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::OneHop: return "one_hop";
        case Scheme::TwoHop: return "two_hop";
        case Scheme::Mixed: return "mixed";
    }
    return "?";
}

// -----------------------------------------------------------------------------
// PropagationMatrix
// -----------------------------------------------------------------------------

PropagationMatrix::PropagationMatrix(Index n, std::vector<Index> seeds, double alpha,
                                     Scheme scheme)
    : n_(n),
      seeds_(std::move(seeds)),
      row_lookup_(n, -1),
      alpha_(alpha),
      scheme_(scheme),
      data_(seeds_.size() * n, 0.0) {
    for (Index r = 0; r < seeds_.size(); ++r) {
        const Index s = seeds_[r];
        if (s >= n) throw std::invalid_argument("seed " + std::to_string(s) + " out of range");
        if (row_lookup_[s] != -1) {
            throw std::invalid_argument("seed " + std::to_string(s) + " listed twice");
        }
        row_lookup_[s] = static_cast<std::ptrdiff_t>(r);
    }
}

PropagationMatrix PropagationMatrix::identity(Index n, std::vector<Index> seeds, double alpha,
                                              Scheme scheme) {
    PropagationMatrix p(n, std::move(seeds), alpha, scheme);
    for (Index r = 0; r < p.row_count(); ++r) p.row(r)[p.seeds_[r]] = 1.0;
    return p;
}

bool PropagationMatrix::is_full() const {
    if (seeds_.size() != n_) return false;
    for (Index r = 0; r < n_; ++r) {
        if (seeds_[r] != r) return false;
    }
    return true;
}

std::optional<Index> PropagationMatrix::row_of(Index seed) const {
    if (seed >= n_ || row_lookup_[seed] < 0) return std::nullopt;
    return static_cast<Index>(row_lookup_[seed]);
}

double PropagationMatrix::at(Index seed, Index col) const {
    const auto r = row_of(seed);
    if (!r) throw std::out_of_range("no row for seed " + std::to_string(seed));
    return row(*r)[col];
}

std::vector<Index> all_seeds(Index n) {
    std::vector<Index> seeds(n);
    std::iota(seeds.begin(), seeds.end(), Index{0});
    return seeds;
}

// -----------------------------------------------------------------------------
// Stationary distributions
// -----------------------------------------------------------------------------

std::vector<double> rwr_row(const StochasticMatrix& m, Index seed, const CpiOptions& opts) {
    validate(opts);
    if (seed >= m.size()) {
        throw std::invalid_argument("seed " + std::to_string(seed) + " out of range for order " +
                                    std::to_string(m.size()));
    }
    std::vector<double> start(m.size(), 0.0);
    start[seed] = 1.0 - opts.alpha;
    return cumulative_power_iteration(m, start, opts).sum;
}

PropagationMatrix full_propagation(const StochasticMatrix& m, const CpiOptions& opts,
                                   Scheme scheme, unsigned threads) {
    return full_propagation(m, opts, all_seeds(m.size()), scheme, threads);
}

PropagationMatrix full_propagation(const StochasticMatrix& m, const CpiOptions& opts,
                                   std::vector<Index> seeds, Scheme scheme, unsigned threads) {
    validate(opts);
    PropagationMatrix p(m.size(), std::move(seeds), opts.alpha, scheme);
    parallel_for(p.row_count(), threads, [&](Index r) {
        const auto dist = rwr_row(m, p.seeds()[r], opts);
        std::copy(dist.begin(), dist.end(), p.row(r).begin());
    });
    return p;
}

// -----------------------------------------------------------------------------
// Push-out updates
// -----------------------------------------------------------------------------

std::vector<double> pushout_row(std::span<const double> row, const StochasticMatrix& m_old,
                                const StochasticMatrix& m_new, const CpiOptions& opts) {
    validate(opts);
    check_same_order(m_old, m_new, row.size());
    return pushout_row_with(row, m_old, m_new, changed_columns(m_old.matrix(), m_new.matrix()),
                            opts);
}

PropagationMatrix pushout_update(const PropagationMatrix& p, const StochasticMatrix& m_old,
                                 const StochasticMatrix& m_new, const CpiOptions& opts,
                                 unsigned threads) {
    validate(opts);
    check_same_order(m_old, m_new, p.n());
    const auto changed = changed_columns(m_old.matrix(), m_new.matrix());
    PropagationMatrix out = p;
    if (changed.empty()) return out;

    if (changed.size() >= p.row_count()) {
        parallel_for(p.row_count(), threads, [&](Index r) {
            const auto updated = pushout_row_with(p.row(r), m_old, m_new, changed, opts);
            std::copy(updated.begin(), updated.end(), out.row(r).begin());
        });
        return out;
    }

    // Response of the series to a unit of mass sitting on each changed column.
    std::vector<std::vector<double>> response(changed.size());
    parallel_for(changed.size(), threads, [&](Index k) {
        std::vector<double> delta(p.n(), 0.0);
        column_delta(m_old, m_new, changed[k], opts.alpha, delta);
        response[k] = cumulative_power_iteration(m_new, delta, opts).sum;
    });

    parallel_for(p.row_count(), threads, [&](Index r) {
        const auto old_row = p.row(r);
        auto new_row = out.row(r);
        bool touched = false;
        for (Index k = 0; k < changed.size(); ++k) {
            const double mass = old_row[changed[k]];
            if (mass == 0.0) continue;
            touched = true;
            const auto& g = response[k];
            for (Index i = 0; i < new_row.size(); ++i) new_row[i] += mass * g[i];
        }
        if (touched) clamp_negative(new_row);
    });
    return out;
}

PropagationMatrix pad_nodes(const PropagationMatrix& p, Index new_n) {
    if (new_n < p.n()) throw std::invalid_argument("pad_nodes: cannot shrink the index space");
    std::vector<Index> seeds = p.seeds();
    const bool full = p.is_full();
    if (full) {
        for (Index i = p.n(); i < new_n; ++i) seeds.push_back(i);
    }
    PropagationMatrix out(new_n, std::move(seeds), p.alpha(), p.scheme());
    for (Index r = 0; r < p.row_count(); ++r) {
        const auto src = p.row(r);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    for (Index r = p.row_count(); r < out.row_count(); ++r) out.row(r)[out.seeds()[r]] = 1.0;
    return out;
}

// -----------------------------------------------------------------------------
// Bipartite 2-hop and mixed schemes
// -----------------------------------------------------------------------------

void check_bipartite(const SparseMatrix& adj, Index news_count) {
    if (!adj.square()) throw std::invalid_argument("bipartite adjacency must be square");
    if (news_count > adj.rows()) throw std::invalid_argument("news count exceeds matrix order");
    for (Index j = 0; j < adj.cols(); ++j) {
        const bool col_news = j < news_count;
        const auto rows = adj.col_rows(j);
        const auto vals = adj.col_values(j);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (vals[k] != 0.0 && (rows[k] < news_count) == col_news) {
                throw std::invalid_argument("adjacency is not bipartite: entry (" +
                                            std::to_string(rows[k]) + ", " + std::to_string(j) +
                                            ") lies in a diagonal block");
            }
        }
    }
}

StochasticMatrix bipartite_two_hop_matrix(const SparseMatrix& adj, Index news_count) {
    check_bipartite(adj, news_count);
    return two_hop(column_normalize(adj));
}

PropagationMatrix bipartite_two_hop_propagation(const SparseMatrix& adj, Index news_count,
                                                const CpiOptions& opts,
                                                std::optional<std::vector<Index>> seeds,
                                                unsigned threads) {
    const auto m2 = bipartite_two_hop_matrix(adj, news_count);
    return full_propagation(m2, opts, seeds ? std::move(*seeds) : all_seeds(m2.size()),
                            Scheme::TwoHop, threads);
}

void MixedWeights::validate() const {
    if (!(beta_an >= 0.0 && beta_nn >= 0.0 && beta_aa >= 0.0)) {
        throw std::invalid_argument("mixing weights must be non-negative");
    }
    if (std::abs(beta_an + beta_nn + beta_aa - 1.0) > 1e-12) {
        throw std::invalid_argument("mixing weights must sum to 1");
    }
}

PropagationMatrix lift(const PropagationMatrix& p, Index combined_n, Index offset,
                       const std::vector<Index>& combined_seeds) {
    if (offset + p.n() > combined_n) throw std::invalid_argument("lift: block exceeds combined space");
    PropagationMatrix out(combined_n, combined_seeds, p.alpha(), p.scheme());
    for (Index r = 0; r < out.row_count(); ++r) {
        const Index s = combined_seeds[r];
        auto dst = out.row(r);
        if (s >= offset && s < offset + p.n()) {
            const auto src_row = p.row_of(s - offset);
            if (!src_row) {
                throw std::invalid_argument("lift: no homogeneous row for combined seed " +
                                            std::to_string(s));
            }
            const auto src = p.row(*src_row);
            std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(offset));
        } else {
            dst[s] = 1.0;
        }
    }
    return out;
}

PropagationMatrix mixed_propagation(const PropagationMatrix& p_an, const PropagationMatrix& p_nn,
                                    const PropagationMatrix& p_aa, const MixedWeights& w) {
    w.validate();
    const Index news = p_nn.n();
    if (p_an.n() != news + p_aa.n()) {
        throw std::invalid_argument("mixed_propagation: author-news matrix has order " +
                                    std::to_string(p_an.n()) + ", expected " +
                                    std::to_string(news + p_aa.n()));
    }
    const auto nn = lift(p_nn, p_an.n(), 0, p_an.seeds());
    const auto aa = lift(p_aa, p_an.n(), news, p_an.seeds());
    PropagationMatrix out(p_an.n(), p_an.seeds(), p_an.alpha(), Scheme::Mixed);
    for (Index r = 0; r < out.row_count(); ++r) {
        const auto a = p_an.row(r);
        const auto b = nn.row(r);
        const auto c = aa.row(r);
        auto dst = out.row(r);
        for (Index i = 0; i < dst.size(); ++i) {
            dst[i] = w.beta_an * a[i] + w.beta_nn * b[i] + w.beta_aa * c[i];
        }
    }
    return out;
}

double max_row_l1_distance(const PropagationMatrix& a, const PropagationMatrix& b) {
    if (a.n() != b.n() || a.seeds() != b.seeds()) {
        throw std::invalid_argument("max_row_l1_distance: matrices cover different rows");
    }
    double worst = 0.0;
    for (Index r = 0; r < a.row_count(); ++r) {
        const auto x = a.row(r);
        const auto y = b.row(r);
        double d = 0.0;
        for (Index i = 0; i < x.size(); ++i) d += std::abs(x[i] - y[i]);
        worst = std::max(worst, d);
    }
    return worst;
}

}  // namespace dynprop
