#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dynprop/dense.hpp"
#include "dynprop/propagate.hpp"

namespace dynprop {

// =============================================================================
// Classifier
//
// Per-node two-layer perceptron d_in -> hidden -> 2 with a rectifier in
// between. It never looks at the graph: neighbourhood information enters
// only through the propagation matrix applied to its logits in predict().
// Column 0 of the logits is Fake, column 1 is Real.
// =============================================================================
class Classifier {
public:
    Classifier() = default;

    // Uniform Glorot initialisation of the weights from `seed`, zero biases.
    Classifier(std::size_t d_in, std::size_t hidden, std::uint64_t seed);

    std::size_t input_dim() const { return w1.rows(); }
    std::size_t hidden_dim() const { return w1.cols(); }

    Matrix w1;               // d_in x hidden
    std::vector<double> b1;  // hidden
    Matrix w2;               // hidden x 2
    std::vector<double> b2;  // 2

    friend bool operator==(const Classifier&, const Classifier&) = default;
};

// Logits, one row per input row. Throws std::invalid_argument when x.cols()
// differs from the classifier input dimension.
Matrix forward(const Classifier& c, const Matrix& x);

// Row r: softmax(P.row(r) * logits). Throws std::invalid_argument unless
// logits has one row per node of P.
Matrix predict(const PropagationMatrix& p, const Matrix& logits);

// Rows of P that enter the loss, with their target probability of Real.
// Hard labels are 0 or 1; fractional targets act as soft labels.
struct Supervision {
    std::vector<Index> rows;
    std::vector<double> targets;
};

struct Gradients {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
};

// Mean cross-entropy of predict() against the targets over the supervised
// rows. Fills `grads` when non-null.
double loss_and_gradients(const Classifier& c, const Matrix& x, const PropagationMatrix& p,
                          const Supervision& s, Gradients* grads);

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t hidden = 64;
    std::size_t max_epochs = 1000;
    std::size_t patience = 10;
    std::size_t folds = 4;
    // A loss counts as an improvement when it beats the best so far by at least this much.
    double min_improvement = 1e-6;
    std::uint64_t seed = 0;

    // Throws std::invalid_argument on patience < 1, folds < 2, hidden < 1,
    // a negative or non-finite learning rate, or max_epochs < 1.
    void validate() const;
};

struct TrainHistory {
    std::vector<double> loss;            // loss before each epoch's update
    std::vector<double> epoch_seconds;   // wall time per epoch
    bool stopped_early = false;          // patience ran out before max_epochs
    double seconds = 0.0;
};

struct TrainResult {
    Classifier classifier;
    TrainHistory history;
};

// Full-batch gradient descent on the supervised rows. Each epoch records the
// current loss, then takes one step. Training stops after `patience`
// consecutive epochs without improvement or at max_epochs. Deterministic for
// a given init_seed. Throws std::invalid_argument when there is no supervised
// row and ConvergenceError if the loss becomes non-finite.
TrainResult fit(const Matrix& x, const PropagationMatrix& p, const Supervision& s,
                const TrainConfig& cfg, std::uint64_t init_seed);

// k disjoint folds covering 0..n_items-1 after a seeded shuffle; sizes differ
// by at most one, larger folds first. Throws std::invalid_argument when
// k > n_items or k == 0.
std::vector<std::vector<Index>> kfold_split(std::size_t n_items, std::size_t k, std::uint64_t seed);

struct MetricsReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    double train_seconds = 0.0;
    int fold = -1;  // -1 for the cross-fold mean

    std::string to_key_value() const;
    std::string to_json() const;
};

// Real (label 1) is the positive class; a score >= threshold predicts Real.
// Precision, recall and F1 are 0 when their denominators vanish. AUC is the
// Mann-Whitney statistic with ties counted one half, and 0.5 when one class is
// absent. Throws std::invalid_argument on empty input or unequal lengths.
MetricsReport evaluate(std::span<const double> scores, std::span<const int> labels,
                       double threshold = 0.5);

// Field-wise mean of the reports; train_seconds is averaged too.
MetricsReport mean_report(std::span<const MetricsReport> reports);

}  // namespace dynprop
