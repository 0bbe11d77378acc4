#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "dynprop/cpi.hpp"
#include "dynprop/dense.hpp"
#include "dynprop/graph.hpp"
#include "dynprop/model.hpp"
#include "dynprop/propagate.hpp"
#include "dynprop/textgraph.hpp"

namespace dynprop {

// dbgnn propagates with the bipartite 2-hop scheme over authorship links
// only; dhgnn mixes it with 1-hop walks over news-news and author-author links.
enum class ModelKind { Dbgnn, Dhgnn };

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

// Labeled keeps propagation rows for every news item and every author with
// at least one news item, which is all the classifier reads. All keeps every row.
enum class RowMode { Labeled, All };

std::string_view to_string(RowMode m);
RowMode parse_row_mode(std::string_view s);

struct ExperimentConfig {
    ModelKind model = ModelKind::Dhgnn;
    CpiOptions cpi;
    MixedWeights betas;
    RowMode rows = RowMode::Labeled;
    TrainConfig train;
    unsigned threads = 1;

    // Validates the nested options; throws std::invalid_argument.
    void validate() const;
};

// Seeds of the combined [news | authors] space kept under `mode`.
std::vector<Index> propagation_seeds(const HeteroGraph& g, RowMode mode);

// Propagation matrix of the configured model over the combined space.
PropagationMatrix build_propagation(const HeteroGraph& g, const ExperimentConfig& cfg);

// One feature row per combined node. Throws DataError naming the first node
// without a feature vector.
Matrix feature_matrix(const HeteroGraph& g, const FeatureTable& features);

struct FoldOutcome {
    MetricsReport report;
    TrainHistory history;
};

struct CrossValidation {
    std::vector<FoldOutcome> folds;
    MetricsReport mean;
    double propagation_seconds = 0.0;
};

// K-fold cross-validation over the labeled news. Per fold, author targets are
// the mean labels of the author's training news only, so held-out labels never
// reach the loss. The propagation matrix is built once and its build time is
// added to each fold's train_seconds. Folds come from derive_seed(seed,
// "split") and fold f initialises from derive_seed(derive_seed(seed, "init"), f).
CrossValidation cross_validate(const HeteroGraph& g, const FeatureTable& features,
                               const ExperimentConfig& cfg);

// =============================================================================
// Dynamic updates
// =============================================================================

// One edge insertion or deletion in local positions: for AuthorNews, src is
// the author position and dst the news position; otherwise both are positions
// within the relation's node type.
struct EdgeUpdate {
    bool insert = true;
    Relation relation = Relation::AuthorNews;
    Index src = 0;
    Index dst = 0;
};

struct UpdateReport {
    std::size_t changed_columns = 0;  // columns of the affected transition matrix that moved
    double pushout_seconds = 0.0;
    double recompute_seconds = 0.0;
    double max_row_l1 = 0.0;          // push-out versus recompute, affected component
};

// Keeps the propagation components of a model current under edge updates. Each
// apply() pushes the change through the affected component and, for
// comparison, recomputes that component from scratch. The push-out result is
// the one kept. An update that leaves the edge set unchanged, or touches a
// relation the model ignores, does no work and reports zeros.
class DynamicPropagation {
public:
    DynamicPropagation(const HeteroGraph& g, const ExperimentConfig& cfg);

    UpdateReport apply(const EdgeUpdate& u);

    // Current combined propagation matrix for the configured model.
    PropagationMatrix current() const;

    std::size_t edge_count(Relation r) const;

private:
    struct Component {
        Relation relation;
        std::vector<Edge> edges;  // sorted; homogeneous relations store (min, max)
        StochasticMatrix m;
        PropagationMatrix p;
        bool active = true;
    };

    StochasticMatrix transition(const Component& c) const;
    Component& component(Relation r);

    ExperimentConfig cfg_;
    Index news_count_ = 0;
    Index author_count_ = 0;
    std::vector<Component> components_;
};

// updates.tsv: `+|-<TAB>an|aa|nn<TAB>src_id<TAB>dst_id`. For an the source is
// the author and the destination the news item. Throws DataError with file:line
// on a malformed line, an unknown id or a self loop.
std::vector<EdgeUpdate> read_updates(const std::filesystem::path& path, const HeteroGraph& g);

// =============================================================================
// Synthetic corpus
// =============================================================================

// Two communities, Real and Fake. Each author and its source belong to one;
// news inherit their author's community, mostly carry its subject, and get
// features drawn around the community mean. Labels follow the community
// unless label_noise flips them.
struct SynthConfig {
    std::size_t news = 200;
    std::size_t authors = 40;
    std::size_t dim = 16;
    double separation = 1.0;      // distance of each community mean from the origin per feature
    double subject_noise = 0.1;   // chance a news item carries the other community's subject
    double label_noise = 0.0;     // chance a news label is flipped
    std::uint64_t seed = 0;
};

struct SynthCorpus {
    HeteroGraph graph;  // mappings built
    FeatureTable features;
};

SynthCorpus make_synthetic_corpus(const SynthConfig& cfg);

// Writes news.tsv, authors.tsv, subjects.tsv, sources.tsv and features.tsv.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace dynprop
