#include "dynprop/textgraph.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include "dynprop/errors.hpp"
#include "dynprop/tsv.hpp"

namespace dynprop {

SparseMatrix build_word_graph(Index n_words, Index window) {
    if (window == 0) throw std::invalid_argument("word graph window must be at least 1");
    std::vector<Coordinate> coords;
    for (Index i = 0; i < n_words; ++i) {
        const Index lo = i >= window ? i - window : 0;
        const Index hi = std::min(n_words - 1, i + window);
        for (Index j = lo; j <= hi; ++j) {
            if (j != i) coords.push_back({j, i, 1.0});
        }
    }
    return SparseMatrix::from_coordinates(n_words, n_words, coords);
}

std::vector<double> pagerank_weights(const SparseMatrix& adj, const CpiOptions& opts) {
    validate(opts);
    if (!adj.square()) throw std::invalid_argument("pagerank_weights: adjacency must be square");
    const Index n = adj.rows();
    if (n == 0) return {};
    const auto m = column_normalize(adj);
    std::vector<double> restart(n, (1.0 - opts.alpha) / static_cast<double>(n));
    return cumulative_power_iteration(m, restart, opts).sum;
}

std::vector<double> aggregate_embedding(const Matrix& features, std::span<const double> weights) {
    if (weights.size() != features.rows()) {
        throw std::invalid_argument("aggregate_embedding: " + std::to_string(weights.size()) +
                                    " weights for " + std::to_string(features.rows()) + " rows");
    }
    std::vector<double> out(features.cols(), 0.0);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const auto row = features.row(i);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += weights[i] * row[c];
    }
    return out;
}

std::vector<double> aggregate_document(std::span<const Matrix> sequences,
                                       const TextGraphOptions& opts) {
    std::size_t dim = 0;
    bool have_dim = false;
    std::size_t total_words = 0;
    for (const auto& s : sequences) {
        if (s.rows() == 0 && s.cols() == 0) continue;
        if (have_dim && s.cols() != dim) {
            throw std::invalid_argument("aggregate_document: sequences differ in dimension");
        }
        dim = s.cols();
        have_dim = true;
        total_words += s.rows();
    }
    if (!have_dim) throw std::invalid_argument("aggregate_document: no sequence carries a dimension");

    std::vector<double> out(dim, 0.0);
    if (total_words == 0) return out;
    for (const auto& s : sequences) {
        if (s.rows() == 0) continue;
        const auto adj = build_word_graph(s.rows(), opts.window);
        const auto w = pagerank_weights(adj, opts.pagerank);
        const auto v = aggregate_embedding(s, w);
        const double share = static_cast<double>(s.rows()) / static_cast<double>(total_words);
        for (std::size_t c = 0; c < dim; ++c) out[c] += share * v[c];
    }
    return out;
}

std::string_view to_string(NodeType t) { return t == NodeType::News ? "news" : "author"; }

NodeType parse_node_type(std::string_view s) {
    if (s == "news") return NodeType::News;
    if (s == "author") return NodeType::Author;
    throw std::invalid_argument("node type must be 'news' or 'author', got '" + std::string(s) +
                                "'");
}

void FeatureTable::insert(NodeType type, std::string id, std::vector<double> values) {
    if (rows_.empty() && dim_ == 0) dim_ = values.size();
    if (values.size() != dim_) {
        throw std::invalid_argument("feature vector of dimension " + std::to_string(values.size()) +
                                    ", table dimension is " + std::to_string(dim_));
    }
    auto key = std::make_pair(type, std::move(id));
    if (rows_.contains(key)) {
        throw std::invalid_argument("duplicate feature row for " + std::string(to_string(type)) +
                                    " '" + key.second + "'");
    }
    rows_.emplace(std::move(key), std::move(values));
}

const std::vector<double>* FeatureTable::find(NodeType type, std::string_view id) const {
    const auto it = rows_.find(std::make_pair(type, std::string(id)));
    return it == rows_.end() ? nullptr : &it->second;
}

FeatureTable read_features(const std::filesystem::path& path) {
    FeatureTable table;
    tsv::Reader reader(path);
    while (reader.next()) {
        reader.expect_fields(3);
        const auto& f = reader.fields();
        try {
            const auto type = parse_node_type(f[0]);
            if (f[1].empty()) reader.fail("empty node id");
            auto values = tsv::parse_floats(f[2]);
            if (values.empty()) reader.fail("empty feature vector");
            table.insert(type, std::string(f[1]), std::move(values));
        } catch (const std::invalid_argument& e) {
            reader.fail(e.what());
        }
    }
    return table;
}

void write_features(const FeatureTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& [key, values] : table.rows()) {
        out << to_string(key.first) << '\t' << key.second << '\t';
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out << ',';
            out << tsv::format_double(values[i]);
        }
        out << '\n';
    }
}

namespace {

std::size_t parse_index(std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a non-negative integer: '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

WordEmbeddings read_word_embeddings(const std::filesystem::path& path) {
    // (node) -> sequence -> position -> vector
    std::map<std::pair<NodeType, std::string>,
             std::map<std::size_t, std::map<std::size_t, std::vector<double>>>>
        staged;
    WordEmbeddings out;
    bool have_dim = false;

    tsv::Reader reader(path);
    while (reader.next()) {
        reader.expect_fields(4);
        const auto& f = reader.fields();
        try {
            const auto type = parse_node_type(f[0]);
            if (f[1].empty()) reader.fail("empty node id");
            std::size_t seq = 0;
            std::size_t pos = 0;
            if (const auto colon = f[2].find(':'); colon != std::string_view::npos) {
                seq = parse_index(f[2].substr(0, colon));
                pos = parse_index(f[2].substr(colon + 1));
            } else {
                pos = parse_index(f[2]);
            }
            auto values = tsv::parse_floats(f[3]);
            if (values.empty()) reader.fail("empty embedding");
            if (!have_dim) {
                out.dim = values.size();
                have_dim = true;
            } else if (values.size() != out.dim) {
                reader.fail("embedding dimension " + std::to_string(values.size()) +
                            " differs from " + std::to_string(out.dim));
            }
            auto& slot = staged[{type, std::string(f[1])}][seq];
            if (!slot.emplace(pos, std::move(values)).second) {
                reader.fail("duplicate word position " + std::string(f[2]));
            }
        } catch (const std::invalid_argument& e) {
            reader.fail(e.what());
        }
    }

    for (auto& [key, sequences] : staged) {
        std::vector<Matrix> mats;
        for (auto& [seq, words] : sequences) {
            if (words.rbegin()->first + 1 != words.size()) {
                throw DataError(path.string() + ": word positions of " +
                                std::string(to_string(key.first)) + " '" + key.second +
                                "' sequence " + std::to_string(seq) + " are not contiguous from 0");
            }
            Matrix m(words.size(), out.dim);
            for (const auto& [pos, values] : words) {
                std::copy(values.begin(), values.end(), m.row(pos).begin());
            }
            mats.push_back(std::move(m));
        }
        out.documents.emplace(key, std::move(mats));
    }
    return out;
}

FeatureTable aggregate_word_embeddings(const WordEmbeddings& words, const TextGraphOptions& opts) {
    FeatureTable table(words.dim);
    for (const auto& [key, sequences] : words.documents) {
        table.insert(key.first, key.second, aggregate_document(sequences, opts));
    }
    return table;
}

}  // namespace dynprop
