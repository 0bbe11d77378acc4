#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dynprop/cpi.hpp"
#include "dynprop/dense.hpp"
#include "dynprop/sparse.hpp"

namespace dynprop {

// Banded 0/1 adjacency over word positions: (i, j) is an edge iff
// 0 < |i - j| <= window. Throws std::invalid_argument when window == 0.
SparseMatrix build_word_graph(Index n_words, Index window);

// PageRank with a uniform restart distribution over the words:
//   w = alpha * column_normalize(adj) * w + (1 - alpha) / n
// Non-negative, sums to 1. An empty graph yields an empty vector.
std::vector<double> pagerank_weights(const SparseMatrix& adj, const CpiOptions& opts);

// sum_i weights[i] * features.row(i). With zero rows the result is the zero
// vector of length features.cols(). Throws std::invalid_argument when the
// weight count differs from the row count.
std::vector<double> aggregate_embedding(const Matrix& features, std::span<const double> weights);

struct TextGraphOptions {
    Index window = 3;
    CpiOptions pagerank{0.85, 1e-9};
};

// One document split into sequences; each sequence is a words x d matrix.
// Sequences are aggregated independently and then averaged with weights
// proportional to their word counts. Throws std::invalid_argument on mixed
// dimensions or when every sequence is empty and no dimension is known.
std::vector<double> aggregate_document(std::span<const Matrix> sequences,
                                       const TextGraphOptions& opts);

// =============================================================================
// FeatureTable
//
// One real vector of fixed dimension per (node type, node id).
// File grammar: node_type(news|author) TAB node_id TAB comma-separated floats.
// =============================================================================
enum class NodeType { News, Author };

std::string_view to_string(NodeType t);
NodeType parse_node_type(std::string_view s);

class FeatureTable {
public:
    FeatureTable() = default;
    explicit FeatureTable(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return rows_.size(); }

    // Throws std::invalid_argument on a dimension mismatch or duplicate key.
    void insert(NodeType type, std::string id, std::vector<double> values);

    const std::vector<double>* find(NodeType type, std::string_view id) const;

    const std::map<std::pair<NodeType, std::string>, std::vector<double>>& rows() const {
        return rows_;
    }

private:
    std::size_t dim_ = 0;
    std::map<std::pair<NodeType, std::string>, std::vector<double>> rows_;
};

// Throws DataError with file:line on malformed rows, inconsistent dimension or duplicates.
FeatureTable read_features(const std::filesystem::path& path);
void write_features(const FeatureTable& table, const std::filesystem::path& path);

// Per-word embeddings, grouped by node and sequence.
// File grammar: node_type TAB node_id TAB position TAB floats, where position
// is either `p` (sequence 0) or `s:p`. Positions inside a sequence must be
// exactly 0..n-1 in any order.
struct WordEmbeddings {
    std::size_t dim = 0;
    std::map<std::pair<NodeType, std::string>, std::vector<Matrix>> documents;
};

WordEmbeddings read_word_embeddings(const std::filesystem::path& path);

// Aggregates every document into one feature row.
FeatureTable aggregate_word_embeddings(const WordEmbeddings& words, const TextGraphOptions& opts);

}  // namespace dynprop
