#include "dynprop/cpi.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dynprop/errors.hpp"

namespace dynprop {

void validate(const CpiOptions& opts) {
    if (!(opts.alpha >= 0.0 && opts.alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in [0, 1), got " + std::to_string(opts.alpha));
    }
    if (!(opts.tol > 0.0)) throw std::invalid_argument("tol must be positive");
}

double l1_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

CpiResult cumulative_power_iteration(const StochasticMatrix& m, std::span<const double> x0,
                                     const CpiOptions& opts) {
    validate(opts);
    if (x0.size() != m.size()) {
        throw std::invalid_argument("cumulative_power_iteration: start vector has length " +
                                    std::to_string(x0.size()) + ", matrix has order " +
                                    std::to_string(m.size()));
    }
    CpiResult result;
    result.sum.assign(x0.begin(), x0.end());
    const double threshold = opts.tol * (1.0 - opts.alpha);
    if (opts.alpha == 0.0 || l1_norm(x0) < threshold) return result;

    std::vector<double> term(x0.begin(), x0.end());
    std::vector<double> next;
    while (true) {
        if (result.iterations == opts.max_iterations) {
            throw ConvergenceError("cumulative power iteration did not reach tol " +
                                   std::to_string(opts.tol) + " within " +
                                   std::to_string(opts.max_iterations) + " iterations");
        }
        m.matrix().multiply_into(term, opts.alpha, next);
        ++result.iterations;
        term.swap(next);
        double norm = 0.0;
        for (std::size_t i = 0; i < term.size(); ++i) {
            result.sum[i] += term[i];
            norm += std::abs(term[i]);
        }
        if (!std::isfinite(norm)) throw ConvergenceError("cumulative power iteration diverged");
        if (norm < threshold) break;
    }
    return result;
}

}  // namespace dynprop
