#include "dynprop/graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "dynprop/errors.hpp"
#include "dynprop/tsv.hpp"

namespace dynprop {

std::string_view to_string(Relation r) {
    switch (r) {
        case Relation::AuthorNews: return "an";
        case Relation::AuthorAuthor: return "aa";
        case Relation::NewsNews: return "nn";
    }
    return "?";
}

Relation parse_relation(std::string_view tag) {
    if (tag == "an") return Relation::AuthorNews;
    if (tag == "aa") return Relation::AuthorAuthor;
    if (tag == "nn") return Relation::NewsNews;
    throw std::invalid_argument("unknown relation '" + std::string(tag) + "' (expected an, aa or nn)");
}

std::optional<Index> HeteroGraph::find_news(std::string_view id) const {
    const auto it = news_index_.find(std::string(id));
    if (it == news_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<Index> HeteroGraph::find_author(std::string_view id) const {
    const auto it = author_index_.find(std::string(id));
    if (it == author_index_.end()) return std::nullopt;
    return it->second;
}

Index HeteroGraph::link_count(Relation r) const {
    switch (r) {
        case Relation::AuthorNews: return edges_an.size();
        case Relation::AuthorAuthor: return edges_aa.size() / 2;
        case Relation::NewsNews: return edges_nn.size() / 2;
    }
    return 0;
}

void HeteroGraph::reindex() {
    news_index_.clear();
    author_index_.clear();
    for (Index i = 0; i < news.size(); ++i) news_index_.emplace(news[i].id, i);
    for (Index i = 0; i < authors.size(); ++i) author_index_.emplace(authors[i].id, i);
}

namespace {

std::vector<NamedRecord> load_named(const std::filesystem::path& path,
                                    std::unordered_set<std::string>& ids) {
    std::vector<NamedRecord> out;
    tsv::Reader reader(path);
    while (reader.next()) {
        reader.expect_fields(2);
        const auto& f = reader.fields();
        if (f[0].empty()) reader.fail("empty id");
        if (!ids.emplace(f[0]).second) reader.fail("duplicate id '" + std::string(f[0]) + "'");
        out.push_back({std::string(f[0]), std::string(f[1])});
    }
    return out;
}

void sort_unique(std::vector<Edge>& edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

// All ordered pairs (a, b), a != b, within each group.
std::vector<Edge> clique_edges(const std::map<std::string, std::vector<Index>>& groups) {
    std::vector<Edge> edges;
    for (const auto& [key, members] : groups) {
        for (Index a : members) {
            for (Index b : members) {
                if (a != b) edges.emplace_back(a, b);
            }
        }
    }
    sort_unique(edges);
    return edges;
}

}  // namespace

HeteroGraph load_graph(const GraphPaths& paths) {
    HeteroGraph g;
    std::unordered_set<std::string> subject_ids;
    std::unordered_set<std::string> source_ids;
    g.subjects = load_named(paths.subjects, subject_ids);
    g.sources = load_named(paths.sources, source_ids);

    {
        tsv::Reader reader(paths.authors);
        std::unordered_set<std::string> seen;
        while (reader.next()) {
            reader.expect_fields(2);
            const auto& f = reader.fields();
            if (f[0].empty()) reader.fail("empty author id");
            if (!seen.emplace(f[0]).second) {
                reader.fail("duplicate author id '" + std::string(f[0]) + "'");
            }
            AuthorRecord rec{std::string(f[0]), std::nullopt, std::nullopt};
            if (!f[1].empty()) {
                if (!source_ids.contains(std::string(f[1]))) {
                    reader.fail("unknown source id '" + std::string(f[1]) + "'");
                }
                rec.source_id = std::string(f[1]);
            }
            g.authors.push_back(std::move(rec));
        }
    }
    g.reindex();

    {
        tsv::Reader reader(paths.news);
        std::unordered_set<std::string> seen;
        while (reader.next()) {
            reader.expect_fields(4);
            const auto& f = reader.fields();
            if (f[0].empty()) reader.fail("empty news id");
            if (!seen.emplace(f[0]).second) {
                reader.fail("duplicate news id '" + std::string(f[0]) + "'");
            }
            if (f[3].empty()) reader.fail("empty author id");
            if (!g.find_author(f[3])) reader.fail("unknown author id '" + std::string(f[3]) + "'");

            NewsRecord rec;
            rec.id = std::string(f[0]);
            rec.author_id = std::string(f[3]);
            if (f[2].size() > 0) {
                for (auto s : tsv::split(f[2], ',')) {
                    if (s.empty()) reader.fail("empty subject id in list");
                    if (!subject_ids.contains(std::string(s))) {
                        reader.fail("unknown subject id '" + std::string(s) + "'");
                    }
                    if (std::find(rec.subject_ids.begin(), rec.subject_ids.end(), s) ==
                        rec.subject_ids.end()) {
                        rec.subject_ids.emplace_back(s);
                    }
                }
            }
            if (f[1] == "0") {
                rec.label = Label::Fake;
            } else if (f[1] == "1") {
                rec.label = Label::Real;
            } else if (f[1].empty()) {
                continue;  // unlabeled rows are filtered out
            } else {
                reader.fail("label must be 0 or 1, got '" + std::string(f[1]) + "'");
            }
            g.news.push_back(std::move(rec));
        }
    }
    g.reindex();
    return g;
}

void build_mappings(HeteroGraph& g) {
    g.reindex();
    g.edges_an.clear();
    for (Index n = 0; n < g.news.size(); ++n) {
        const auto a = g.find_author(g.news[n].author_id);
        if (!a) throw DataError("news '" + g.news[n].id + "' references unknown author '" +
                                g.news[n].author_id + "'");
        g.edges_an.emplace_back(*a, n);
    }
    sort_unique(g.edges_an);

    std::map<std::string, std::vector<Index>> by_source;
    for (Index a = 0; a < g.authors.size(); ++a) {
        if (g.authors[a].source_id) by_source[*g.authors[a].source_id].push_back(a);
    }
    g.edges_aa = clique_edges(by_source);

    std::map<std::string, std::vector<Index>> by_subject;
    for (Index n = 0; n < g.news.size(); ++n) {
        for (const auto& s : g.news[n].subject_ids) by_subject[s].push_back(n);
    }
    g.edges_nn = clique_edges(by_subject);
}

void derive_author_labels(HeteroGraph& g, const std::vector<bool>* news_mask) {
    if (news_mask && news_mask->size() != g.news.size()) {
        throw std::invalid_argument("derive_author_labels: mask length differs from news count");
    }
    g.reindex();
    std::vector<double> sum(g.authors.size(), 0.0);
    std::vector<std::size_t> count(g.authors.size(), 0);
    for (Index n = 0; n < g.news.size(); ++n) {
        if (news_mask && !(*news_mask)[n]) continue;
        const auto& rec = g.news[n];
        if (!rec.label) continue;
        const auto a = g.find_author(rec.author_id);
        if (!a) continue;
        sum[*a] += static_cast<double>(static_cast<int>(*rec.label));
        ++count[*a];
    }
    for (Index a = 0; a < g.authors.size(); ++a) {
        if (count[a] == 0) {
            g.authors[a].derived_label.reset();
        } else {
            g.authors[a].derived_label = sum[a] / static_cast<double>(count[a]);
        }
    }
}

SparseMatrix relation_adjacency(Index news_count, Index author_count, Relation r,
                                const std::vector<Edge>& edges) {
    std::vector<Edge> unique = edges;
    std::vector<Coordinate> coords;
    switch (r) {
        case Relation::AuthorNews: {
            sort_unique(unique);
            const Index n = news_count + author_count;
            coords.reserve(2 * unique.size());
            for (const auto& [a, news] : unique) {
                if (a >= author_count || news >= news_count) {
                    throw std::out_of_range("author-news edge endpoint out of range");
                }
                coords.push_back({news, news_count + a, 1.0});
                coords.push_back({news_count + a, news, 1.0});
            }
            return SparseMatrix::from_coordinates(n, n, coords);
        }
        case Relation::AuthorAuthor:
        case Relation::NewsNews: {
            const Index n = r == Relation::AuthorAuthor ? author_count : news_count;
            for (auto& e : unique) {
                if (e.first > e.second) std::swap(e.first, e.second);
            }
            sort_unique(unique);
            for (const auto& [u, v] : unique) {
                if (u == v) continue;
                coords.push_back({u, v, 1.0});
                coords.push_back({v, u, 1.0});
            }
            return SparseMatrix::from_coordinates(n, n, coords);
        }
    }
    throw std::invalid_argument("unknown relation");
}

SparseMatrix relation_adjacency(const HeteroGraph& g, Relation r) {
    switch (r) {
        case Relation::AuthorNews:
            return relation_adjacency(g.news_count(), g.author_count(), r, g.edges_an);
        case Relation::AuthorAuthor:
            return relation_adjacency(g.news_count(), g.author_count(), r, g.edges_aa);
        case Relation::NewsNews:
            return relation_adjacency(g.news_count(), g.author_count(), r, g.edges_nn);
    }
    throw std::invalid_argument("unknown relation");
}

GraphPaths snapshot_paths(const std::filesystem::path& dir) {
    return {dir / "news.tsv", dir / "authors.tsv", dir / "subjects.tsv", dir / "sources.tsv"};
}

void write_graph_snapshot(const HeteroGraph& g, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto paths = snapshot_paths(dir);
    auto open = [](const std::filesystem::path& p) {
        std::ofstream out(p);
        if (!out) throw DataError("cannot write " + p.string());
        return out;
    };
    {
        auto out = open(paths.news);
        for (const auto& n : g.news) {
            out << n.id << '\t';
            if (n.label) out << static_cast<int>(*n.label);
            out << '\t';
            for (std::size_t i = 0; i < n.subject_ids.size(); ++i) {
                if (i) out << ',';
                out << n.subject_ids[i];
            }
            out << '\t' << n.author_id << '\n';
        }
    }
    {
        auto out = open(paths.authors);
        for (const auto& a : g.authors) out << a.id << '\t' << a.source_id.value_or("") << '\n';
    }
    {
        auto out = open(paths.subjects);
        for (const auto& s : g.subjects) out << s.id << '\t' << s.name << '\n';
    }
    {
        auto out = open(paths.sources);
        for (const auto& s : g.sources) out << s.id << '\t' << s.name << '\n';
    }
    {
        auto out = open(dir / "edges.tsv");
        out << "# relation\tsrc_id\tdst_id\n";
        for (const auto& [a, n] : g.edges_an) {
            out << "an\t" << g.authors[a].id << '\t' << g.news[n].id << '\n';
        }
        for (const auto& [u, v] : g.edges_aa) {
            if (u < v) out << "aa\t" << g.authors[u].id << '\t' << g.authors[v].id << '\n';
        }
        for (const auto& [u, v] : g.edges_nn) {
            if (u < v) out << "nn\t" << g.news[u].id << '\t' << g.news[v].id << '\n';
        }
    }
}

}  // namespace dynprop
