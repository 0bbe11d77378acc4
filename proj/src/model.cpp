#include "dynprop/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dynprop/errors.hpp"
#include "dynprop/rng.hpp"
#include "dynprop/tsv.hpp"
#include "json.hpp"

namespace dynprop {

Classifier::Classifier(std::size_t d_in, std::size_t hidden, std::uint64_t seed)
    : w1(d_in, hidden), b1(hidden, 0.0), w2(hidden, 2), b2(2, 0.0) {
    Rng rng(seed);
    const double r1 = std::sqrt(6.0 / static_cast<double>(d_in + hidden));
    for (auto& w : w1.data()) w = rng.uniform(-r1, r1);
    const double r2 = std::sqrt(6.0 / static_cast<double>(hidden + 2));
    for (auto& w : w2.data()) w = rng.uniform(-r2, r2);
}

namespace {

// Pre-activation of the hidden layer, x W1 + b1.
Matrix hidden_preactivation(const Classifier& c, const Matrix& x) {
    if (x.cols() != c.input_dim()) {
        throw std::invalid_argument("classifier expects " + std::to_string(c.input_dim()) +
                                    " features, got " + std::to_string(x.cols()));
    }
    Matrix z(x.rows(), c.hidden_dim());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto zi = z.row(i);
        std::copy(c.b1.begin(), c.b1.end(), zi.begin());
        const auto xi = x.row(i);
        for (std::size_t k = 0; k < x.cols(); ++k) {
            const double v = xi[k];
            if (v == 0.0) continue;
            const auto wk = c.w1.row(k);
            for (std::size_t h = 0; h < zi.size(); ++h) zi[h] += v * wk[h];
        }
    }
    return z;
}

Matrix output_layer(const Classifier& c, const Matrix& pre) {
    Matrix out(pre.rows(), 2);
    for (std::size_t i = 0; i < pre.rows(); ++i) {
        const auto zi = pre.row(i);
        double o0 = c.b2[0], o1 = c.b2[1];
        for (std::size_t h = 0; h < zi.size(); ++h) {
            const double a = zi[h] > 0.0 ? zi[h] : 0.0;
            o0 += a * c.w2(h, 0);
            o1 += a * c.w2(h, 1);
        }
        out(i, 0) = o0;
        out(i, 1) = o1;
    }
    return out;
}

void softmax2(double z0, double z1, double& p0, double& p1) {
    const double m = std::max(z0, z1);
    const double e0 = std::exp(z0 - m);
    const double e1 = std::exp(z1 - m);
    const double s = e0 + e1;
    p0 = e0 / s;
    p1 = e1 / s;
}

void propagate_logits(std::span<const double> p_row, const Matrix& logits, double& z0, double& z1) {
    z0 = 0.0;
    z1 = 0.0;
    for (std::size_t j = 0; j < p_row.size(); ++j) {
        const double w = p_row[j];
        if (w == 0.0) continue;
        z0 += w * logits(j, 0);
        z1 += w * logits(j, 1);
    }
}

}  // namespace

Matrix forward(const Classifier& c, const Matrix& x) {
    return output_layer(c, hidden_preactivation(c, x));
}

Matrix predict(const PropagationMatrix& p, const Matrix& logits) {
    if (logits.rows() != p.n() || logits.cols() != 2) {
        throw std::invalid_argument("predict: logits have " + std::to_string(logits.rows()) +
                                    " rows, propagation matrix has order " + std::to_string(p.n()));
    }
    Matrix probs(p.row_count(), 2);
    for (Index r = 0; r < p.row_count(); ++r) {
        double z0, z1;
        propagate_logits(p.row(r), logits, z0, z1);
        softmax2(z0, z1, probs(r, 0), probs(r, 1));
    }
    return probs;
}

double loss_and_gradients(const Classifier& c, const Matrix& x, const PropagationMatrix& p,
                          const Supervision& s, Gradients* grads) {
    if (s.rows.size() != s.targets.size()) {
        throw std::invalid_argument("supervision rows and targets differ in length");
    }
    if (s.rows.empty()) throw std::invalid_argument("no supervised rows");
    if (x.rows() != p.n()) {
        throw std::invalid_argument("feature matrix has " + std::to_string(x.rows()) +
                                    " rows, propagation matrix has order " + std::to_string(p.n()));
    }
    const Matrix pre = hidden_preactivation(c, x);
    const Matrix logits = output_layer(c, pre);

    const double scale = 1.0 / static_cast<double>(s.rows.size());
    double loss = 0.0;
    Matrix d_logits(x.rows(), 2);
    for (std::size_t k = 0; k < s.rows.size(); ++k) {
        const auto row = p.row(s.rows[k]);
        double z0, z1, q0, q1;
        propagate_logits(row, logits, z0, z1);
        softmax2(z0, z1, q0, q1);
        const double t1 = s.targets[k];
        const double t0 = 1.0 - t1;
        // log-softmax directly, so saturated rows stay finite
        const double m = std::max(z0, z1);
        const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
        loss -= scale * (t0 * (z0 - lse) + t1 * (z1 - lse));
        if (!grads) continue;
        const double g0 = scale * (q0 - t0);
        const double g1 = scale * (q1 - t1);
        for (std::size_t j = 0; j < row.size(); ++j) {
            const double w = row[j];
            if (w == 0.0) continue;
            d_logits(j, 0) += w * g0;
            d_logits(j, 1) += w * g1;
        }
    }
    if (!grads) return loss;

    const std::size_t h = c.hidden_dim();
    grads->w1 = Matrix(c.input_dim(), h);
    grads->b1.assign(h, 0.0);
    grads->w2 = Matrix(h, 2);
    grads->b2.assign(2, 0.0);
    std::vector<double> d_hidden(h);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double g0 = d_logits(i, 0);
        const double g1 = d_logits(i, 1);
        if (g0 == 0.0 && g1 == 0.0) continue;
        grads->b2[0] += g0;
        grads->b2[1] += g1;
        const auto zi = pre.row(i);
        bool any = false;
        for (std::size_t k = 0; k < h; ++k) {
            if (zi[k] > 0.0) {
                grads->w2(k, 0) += zi[k] * g0;
                grads->w2(k, 1) += zi[k] * g1;
                d_hidden[k] = g0 * c.w2(k, 0) + g1 * c.w2(k, 1);
                any = true;
            } else {
                d_hidden[k] = 0.0;
            }
        }
        if (!any) continue;
        for (std::size_t k = 0; k < h; ++k) grads->b1[k] += d_hidden[k];
        const auto xi = x.row(i);
        for (std::size_t f = 0; f < xi.size(); ++f) {
            if (xi[f] == 0.0) continue;
            auto gf = grads->w1.row(f);
            for (std::size_t k = 0; k < h; ++k) gf[k] += xi[f] * d_hidden[k];
        }
    }
    return loss;
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning rate must be finite and non-negative");
    }
    if (hidden < 1) throw std::invalid_argument("hidden width must be at least 1");
    if (max_epochs < 1) throw std::invalid_argument("max epochs must be at least 1");
    if (patience < 1) throw std::invalid_argument("patience must be at least 1");
    if (folds < 2) throw std::invalid_argument("folds must be at least 2");
}

TrainResult fit(const Matrix& x, const PropagationMatrix& p, const Supervision& s,
                const TrainConfig& cfg, std::uint64_t init_seed) {
    cfg.validate();
    if (s.rows.empty()) throw std::invalid_argument("training needs at least one labeled node");
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();

    TrainResult result{Classifier(x.cols(), cfg.hidden, init_seed), {}};
    auto& c = result.classifier;
    auto& hist = result.history;

    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    Gradients g;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto t0 = clock::now();
        const double loss = loss_and_gradients(c, x, p, s, &g);
        if (!std::isfinite(loss)) {
            throw ConvergenceError("training loss became non-finite at epoch " +
                                   std::to_string(epoch));
        }
        hist.loss.push_back(loss);
        if (loss <= best - cfg.min_improvement) {
            best = loss;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best >= cfg.patience) {
            hist.epoch_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
            hist.stopped_early = epoch + 1 < cfg.max_epochs;
            break;
        }
        const double lr = cfg.learning_rate;
        for (std::size_t i = 0; i < c.w1.data().size(); ++i) c.w1.data()[i] -= lr * g.w1.data()[i];
        for (std::size_t i = 0; i < c.b1.size(); ++i) c.b1[i] -= lr * g.b1[i];
        for (std::size_t i = 0; i < c.w2.data().size(); ++i) c.w2.data()[i] -= lr * g.w2.data()[i];
        for (std::size_t i = 0; i < 2; ++i) c.b2[i] -= lr * g.b2[i];
        hist.epoch_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    }
    hist.seconds = std::chrono::duration<double>(clock::now() - start).count();
    return result;
}

std::vector<std::vector<Index>> kfold_split(std::size_t n_items, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw std::invalid_argument("kfold_split: k must be positive");
    if (k > n_items) {
        throw std::invalid_argument("kfold_split: " + std::to_string(k) + " folds for " +
                                    std::to_string(n_items) + " items");
    }
    std::vector<Index> order(n_items);
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(seed);
    for (std::size_t i = n_items; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    std::vector<std::vector<Index>> folds(k);
    const std::size_t base = n_items / k;
    const std::size_t extra = n_items % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                        order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        std::sort(folds[f].begin(), folds[f].end());
        pos += size;
    }
    return folds;
}

MetricsReport evaluate(std::span<const double> scores, std::span<const int> labels,
                       double threshold) {
    if (scores.empty()) throw std::invalid_argument("evaluate: empty input");
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("evaluate: scores and labels differ in length");
    }
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("labels must be 0 or 1");
        const bool pred = scores[i] >= threshold;
        if (pred && labels[i] == 1) ++tp;
        else if (pred) ++fp;
        else if (labels[i] == 1) ++fn;
        else ++tn;
    }
    MetricsReport r;
    r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(scores.size());
    r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f1 = r.precision + r.recall > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;

    // Twice the Mann-Whitney count, kept integral so ties stay exact.
    const std::size_t pos = tp + fn, neg = fp + tn;
    if (pos == 0 || neg == 0) {
        r.auc = 0.5;
        return r;
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });
    std::uint64_t twice_wins = 0;
    std::uint64_t neg_below = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::uint64_t group_pos = 0, group_neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? group_pos : group_neg) += 1;
            ++j;
        }
        twice_wins += 2 * group_pos * neg_below + group_pos * group_neg;
        neg_below += group_neg;
        i = j;
    }
    r.auc = static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
    return r;
}

MetricsReport mean_report(std::span<const MetricsReport> reports) {
    MetricsReport m;
    if (reports.empty()) return m;
    for (const auto& r : reports) {
        m.accuracy += r.accuracy;
        m.precision += r.precision;
        m.recall += r.recall;
        m.f1 += r.f1;
        m.auc += r.auc;
        m.train_seconds += r.train_seconds;
    }
    const double k = static_cast<double>(reports.size());
    m.accuracy /= k;
    m.precision /= k;
    m.recall /= k;
    m.f1 /= k;
    m.auc /= k;
    m.train_seconds /= k;
    m.fold = -1;
    return m;
}

std::string MetricsReport::to_key_value() const {
    std::ostringstream out;
    out << "fold=" << (fold < 0 ? std::string("mean") : std::to_string(fold))
        << " accuracy=" << tsv::format_double(accuracy)
        << " precision=" << tsv::format_double(precision)
        << " recall=" << tsv::format_double(recall) << " f1=" << tsv::format_double(f1)
        << " auc=" << tsv::format_double(auc)
        << " train_seconds=" << tsv::format_double(train_seconds);
    return out.str();
}

std::string MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["accuracy"] = accuracy;
    j["precision"] = precision;
    j["recall"] = recall;
    j["f1"] = f1;
    j["auc"] = auc;
    j["train_seconds"] = train_seconds;
    if (fold < 0) {
        j["fold"] = "mean";
    } else {
        j["fold"] = fold;
    }
    return j.dump();
}

}  // namespace dynprop
