#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dynprop/sparse.hpp"

namespace dynprop {

struct CpiOptions {
    double alpha = 0.85;  // probability of following an edge
    double tol = 1e-9;    // L1 bound on the truncated tail
    std::size_t max_iterations = 1'000'000;
};

// Throws std::invalid_argument unless 0 <= alpha < 1 and tol > 0.
void validate(const CpiOptions& opts);

struct CpiResult {
    std::vector<double> sum;
    std::size_t iterations = 0;  // number of matrix-vector products performed
};

// Cumulative power iteration: sum_{k>=0} (alpha M)^k x0.
//
// Terms are added until the last added term x_K satisfies
// ||x_K||_1 < tol * (1 - alpha). Since M is column-stochastic,
// ||(alpha M)^j x_K||_1 <= alpha^j ||x_K||_1, so the discarded tail has L1 norm
// below tol. x0 may have entries of either sign.
//
// Throws ConvergenceError if max_iterations is reached first.
CpiResult cumulative_power_iteration(const StochasticMatrix& m, std::span<const double> x0,
                                     const CpiOptions& opts);

double l1_norm(std::span<const double> v);

}  // namespace dynprop
