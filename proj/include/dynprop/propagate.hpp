#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dynprop/cpi.hpp"
#include "dynprop/sparse.hpp"

namespace dynprop {

enum class Scheme { OneHop, TwoHop, Mixed };

std::string_view to_string(Scheme s);

// =============================================================================
// PropagationMatrix
//
// Dense rows of random-walk-with-restart distributions. Row r is the
// stationary distribution seeded at node seeds()[r]:
//
//     p = alpha * M * p + (1 - alpha) * e_seed,   M column-stochastic.
//
// A full matrix has seeds 0..n-1; a row subset keeps only the rows the
// classifier reads, which is what makes large graphs tractable.
// =============================================================================
class PropagationMatrix {
public:
    PropagationMatrix() = default;

    // Zero-filled rows for the given seeds. Throws std::invalid_argument on an
    // out-of-range or repeated seed.
    PropagationMatrix(Index n, std::vector<Index> seeds, double alpha, Scheme scheme);

    // Row e_seed for every seed.
    static PropagationMatrix identity(Index n, std::vector<Index> seeds, double alpha,
                                      Scheme scheme);

    Index n() const { return n_; }
    Index row_count() const { return seeds_.size(); }
    double alpha() const { return alpha_; }
    Scheme scheme() const { return scheme_; }
    const std::vector<Index>& seeds() const { return seeds_; }
    bool is_full() const;

    std::optional<Index> row_of(Index seed) const;

    std::span<double> row(Index r) { return {data_.data() + r * n_, n_}; }
    std::span<const double> row(Index r) const { return {data_.data() + r * n_, n_}; }

    // Entry (seed, col); the seed must have a row.
    double at(Index seed, Index col) const;

    friend bool operator==(const PropagationMatrix&, const PropagationMatrix&) = default;

private:
    Index n_ = 0;
    std::vector<Index> seeds_;
    std::vector<std::ptrdiff_t> row_lookup_;
    double alpha_ = 0.0;
    Scheme scheme_ = Scheme::OneHop;
    std::vector<double> data_;
};

std::vector<Index> all_seeds(Index n);

// (1 - alpha) * sum_k (alpha M)^k e_seed, truncated per CpiOptions.
// Throws std::invalid_argument for alpha outside [0, 1) or a bad seed.
std::vector<double> rwr_row(const StochasticMatrix& m, Index seed, const CpiOptions& opts);

// Row i = rwr_row(m, i) for every seed. Rows are computed on `threads`
// workers; the result does not depend on the thread count.
PropagationMatrix full_propagation(const StochasticMatrix& m, const CpiOptions& opts,
                                   Scheme scheme = Scheme::OneHop, unsigned threads = 1);
PropagationMatrix full_propagation(const StochasticMatrix& m, const CpiOptions& opts,
                                   std::vector<Index> seeds, Scheme scheme = Scheme::OneHop,
                                   unsigned threads = 1);

// Push-out correction of a single distribution after M changes to M':
//     d = alpha (M' - M) p,   p' = p + sum_k (alpha M')^k d.
// Only the changed columns of M are touched when forming d.
std::vector<double> pushout_row(std::span<const double> row, const StochasticMatrix& m_old,
                                const StochasticMatrix& m_new, const CpiOptions& opts);

// Applies the push-out correction to every row of `p`. Because d is linear in
// p and only the changed columns C of M contribute,
//     sum_k (alpha M')^k d = sum_{c in C} p[c] * g_c,
//     g_c = sum_k (alpha M')^k alpha (M'[:, c] - M[:, c]),
// so the series is evaluated |C| times instead of once per row when that is
// cheaper. The per-row L1 error stays below opts.tol either way. Entries that
// truncation pushes below zero are clamped to zero.
//
// Throws std::invalid_argument on a dimension mismatch.
PropagationMatrix pushout_update(const PropagationMatrix& p, const StochasticMatrix& m_old,
                                 const StochasticMatrix& m_new, const CpiOptions& opts,
                                 unsigned threads = 1);

// Grows the index space to `new_n` nodes. Existing rows get zero mass on the
// new columns; in a full matrix each new node gets the row e_i, its
// distribution while it has no edges. Edges to the new nodes are then added
// with pushout_update.
PropagationMatrix pad_nodes(const PropagationMatrix& p, Index new_n);

// Throws std::invalid_argument unless `adj` is square and has no entries in
// the news-news or author-author diagonal blocks of the combined
// [news | authors] index space.
void check_bipartite(const SparseMatrix& adj, Index news_count);

// full_propagation over two_hop(column_normalize(adj)). A 2-hop walk never
// leaves the seed's side, so each row has zero mass on the other side.
PropagationMatrix bipartite_two_hop_propagation(const SparseMatrix& adj, Index news_count,
                                                const CpiOptions& opts,
                                                std::optional<std::vector<Index>> seeds = {},
                                                unsigned threads = 1);

// Transition matrix used by bipartite_two_hop_propagation.
StochasticMatrix bipartite_two_hop_matrix(const SparseMatrix& adj, Index news_count);

struct MixedWeights {
    double beta_an = 1.0 / 3.0;
    double beta_nn = 1.0 / 3.0;
    double beta_aa = 1.0 / 3.0;

    // Throws std::invalid_argument on a negative weight or |sum - 1| > 1e-12.
    void validate() const;
};

// Embeds a homogeneous propagation matrix over one node type into the
// combined [news | authors] space. `offset` is 0 for news and news_count for
// authors. Combined seeds outside that block get the row e_seed.
PropagationMatrix lift(const PropagationMatrix& p, Index combined_n, Index offset,
                       const std::vector<Index>& combined_seeds);

// beta_an * P_an + beta_nn * lift(P_nn) + beta_aa * lift(P_aa), over the
// seeds of P_an. p_nn must cover the news seeds and p_aa the author seeds.
PropagationMatrix mixed_propagation(const PropagationMatrix& p_an, const PropagationMatrix& p_nn,
                                    const PropagationMatrix& p_aa, const MixedWeights& w);

// Largest per-row L1 distance between two matrices with identical seeds.
double max_row_l1_distance(const PropagationMatrix& a, const PropagationMatrix& b);

}  // namespace dynprop
