#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dynprop/sparse.hpp"

namespace dynprop {

enum class Label : int { Fake = 0, Real = 1 };

struct NewsRecord {
    std::string id;
    std::optional<Label> label;
    std::vector<std::string> subject_ids;
    std::string author_id;
};

struct AuthorRecord {
    std::string id;
    std::optional<std::string> source_id;
    std::optional<double> derived_label;  // mean of the author's news labels, in [0, 1]
};

struct NamedRecord {
    std::string id;
    std::string name;
};

enum class Relation { AuthorNews, AuthorAuthor, NewsNews };

std::string_view to_string(Relation r);
// Parses "an" / "aa" / "nn"; throws std::invalid_argument otherwise.
Relation parse_relation(std::string_view tag);

using Edge = std::pair<Index, Index>;

// =============================================================================
// HeteroGraph
//
// News, author, subject and source node sets plus the three typed edge lists.
// Edge endpoints are positions inside the respective node vector:
//   edges_an: (author position, news position)
//   edges_aa: (author, author), both orientations stored, no self loops
//   edges_nn: (news, news), both orientations stored, no self loops
// Every edge list is sorted and duplicate free.
// =============================================================================
struct HeteroGraph {
    std::vector<NewsRecord> news;
    std::vector<AuthorRecord> authors;
    std::vector<NamedRecord> subjects;
    std::vector<NamedRecord> sources;

    std::vector<Edge> edges_an;
    std::vector<Edge> edges_aa;
    std::vector<Edge> edges_nn;

    Index news_count() const { return news.size(); }
    Index author_count() const { return authors.size(); }
    // Size of the combined [news | authors] index space.
    Index node_count() const { return news.size() + authors.size(); }
    Index combined_author_index(Index author_pos) const { return news.size() + author_pos; }

    std::optional<Index> find_news(std::string_view id) const;
    std::optional<Index> find_author(std::string_view id) const;

    // Number of undirected links per relation.
    Index link_count(Relation r) const;

    // Rebuilds the id -> position lookup tables after the node vectors change.
    void reindex();

private:
    std::unordered_map<std::string, Index> news_index_;
    std::unordered_map<std::string, Index> author_index_;
};

struct GraphPaths {
    std::filesystem::path news;
    std::filesystem::path authors;
    std::filesystem::path subjects;
    std::filesystem::path sources;
};

// Reads the four TSV files. Rows of news.tsv with an empty label are dropped.
// Throws DataError with file:line on malformed rows, duplicate ids or ids that
// reference a missing subject, source or author.
HeteroGraph load_graph(const GraphPaths& paths);

// Fills edges_an / edges_aa / edges_nn from the node attributes:
// authorship, shared source, shared subject. Authors without a source get no
// author-author edges. Idempotent.
void build_mappings(HeteroGraph& g);

// Sets each author's derived_label to the mean label of the news it wrote.
// When `news_mask` is given only news with mask[i] true contribute; authors
// with no contributing labeled news end up without a label.
void derive_author_labels(HeteroGraph& g, const std::vector<bool>* news_mask = nullptr);

// 0/1 symmetric adjacency. AuthorAuthor is indexed by author position,
// NewsNews by news position, AuthorNews by the combined [news | authors] space.
SparseMatrix relation_adjacency(const HeteroGraph& g, Relation r);

// Same for a relation given as an edge list (both orientations for the
// homogeneous relations, (author, news) for AuthorNews).
SparseMatrix relation_adjacency(Index news_count, Index author_count, Relation r,
                                const std::vector<Edge>& edges);

// Writes the four node files in the load_graph grammar plus edges.tsv
// (`relation<TAB>src_id<TAB>dst_id`, one line per undirected link).
void write_graph_snapshot(const HeteroGraph& g, const std::filesystem::path& dir);

GraphPaths snapshot_paths(const std::filesystem::path& dir);

}  // namespace dynprop
