#include "dynprop/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dynprop {

SparseMatrix::SparseMatrix(Index n_rows, Index n_cols)
    : n_rows_(n_rows), n_cols_(n_cols), col_ptr_(n_cols + 1, 0) {}

SparseMatrix::SparseMatrix(Index n_rows, Index n_cols, std::vector<Index> col_ptr,
                           std::vector<Index> row_idx, std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      col_ptr_(std::move(col_ptr)),
      row_idx_(std::move(row_idx)),
      values_(std::move(values)) {}

SparseMatrix SparseMatrix::from_coordinates(Index n_rows, Index n_cols,
                                            std::span<const Coordinate> coords) {
    for (const auto& c : coords) {
        if (c.row >= n_rows || c.col >= n_cols) {
            std::ostringstream msg;
            msg << "coordinate (" << c.row << ", " << c.col << ") out of range for a " << n_rows
                << "x" << n_cols << " matrix";
            throw std::out_of_range(msg.str());
        }
        if (!std::isfinite(c.value)) {
            std::ostringstream msg;
            msg << "non-finite value at (" << c.row << ", " << c.col << ")";
            throw std::invalid_argument(msg.str());
        }
    }

    std::vector<Index> order(coords.size());
    std::iota(order.begin(), order.end(), Index{0});
    // Stable so that duplicates are summed in input order.
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        if (coords[a].col != coords[b].col) return coords[a].col < coords[b].col;
        return coords[a].row < coords[b].row;
    });

    std::vector<Index> col_ptr(n_cols + 1, 0);
    std::vector<Index> row_idx;
    std::vector<double> values;
    row_idx.reserve(coords.size());
    values.reserve(coords.size());

    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& c = coords[order[k]];
        if (k > 0) {
            const auto& prev = coords[order[k - 1]];
            if (prev.row == c.row && prev.col == c.col) {
                values.back() += c.value;
                continue;
            }
        }
        row_idx.push_back(c.row);
        values.push_back(c.value);
        ++col_ptr[c.col + 1];
    }
    std::partial_sum(col_ptr.begin(), col_ptr.end(), col_ptr.begin());
    return SparseMatrix(n_rows, n_cols, std::move(col_ptr), std::move(row_idx), std::move(values));
}

SparseMatrix SparseMatrix::identity(Index n) {
    std::vector<Index> col_ptr(n + 1);
    std::iota(col_ptr.begin(), col_ptr.end(), Index{0});
    std::vector<Index> row_idx(n);
    std::iota(row_idx.begin(), row_idx.end(), Index{0});
    return SparseMatrix(n, n, std::move(col_ptr), std::move(row_idx), std::vector<double>(n, 1.0));
}

double SparseMatrix::at(Index row, Index col) const {
    if (row >= n_rows_ || col >= n_cols_) throw std::out_of_range("SparseMatrix::at");
    const auto rows = col_rows(col);
    const auto it = std::lower_bound(rows.begin(), rows.end(), row);
    if (it == rows.end() || *it != row) return 0.0;
    return values_[col_ptr_[col] + static_cast<Index>(it - rows.begin())];
}

double SparseMatrix::column_sum(Index col) const {
    double s = 0.0;
    for (double v : col_values(col)) s += v;
    return s;
}

std::vector<Coordinate> SparseMatrix::coordinates() const {
    std::vector<Coordinate> out;
    out.reserve(values_.size());
    for (Index j = 0; j < n_cols_; ++j) {
        for (Index k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
            out.push_back({row_idx_[k], j, values_[k]});
        }
    }
    return out;
}

std::vector<double> SparseMatrix::to_dense() const {
    std::vector<double> dense(n_rows_ * n_cols_, 0.0);
    for (Index j = 0; j < n_cols_; ++j) {
        for (Index k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
            dense[row_idx_[k] * n_cols_ + j] = values_[k];
        }
    }
    return dense;
}

std::vector<double> SparseMatrix::multiply(std::span<const double> v) const {
    std::vector<double> out;
    multiply_into(v, 1.0, out);
    return out;
}

void SparseMatrix::multiply_into(std::span<const double> v, double scale,
                                 std::vector<double>& out) const {
    if (v.size() != n_cols_) {
        std::ostringstream msg;
        msg << "matvec: vector of length " << v.size() << " against " << n_rows_ << "x" << n_cols_
            << " matrix";
        throw std::invalid_argument(msg.str());
    }
    out.assign(n_rows_, 0.0);
    for (Index j = 0; j < n_cols_; ++j) {
        const double x = v[j];
        if (x == 0.0) continue;
        const double sx = scale * x;
        for (Index k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
            out[row_idx_[k]] += values_[k] * sx;
        }
    }
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimensions differ");
    const Index n_rows = a.rows();
    std::vector<Index> col_ptr(b.cols() + 1, 0);
    std::vector<Index> row_idx;
    std::vector<double> values;

    std::vector<double> acc(n_rows, 0.0);
    std::vector<char> touched(n_rows, 0);
    std::vector<Index> pattern;

    for (Index j = 0; j < b.cols(); ++j) {
        pattern.clear();
        const auto b_rows = b.col_rows(j);
        const auto b_vals = b.col_values(j);
        for (std::size_t t = 0; t < b_rows.size(); ++t) {
            const Index k = b_rows[t];
            const double bkj = b_vals[t];
            const auto a_rows = a.col_rows(k);
            const auto a_vals = a.col_values(k);
            for (std::size_t s = 0; s < a_rows.size(); ++s) {
                const Index i = a_rows[s];
                if (!touched[i]) {
                    touched[i] = 1;
                    pattern.push_back(i);
                }
                acc[i] += a_vals[s] * bkj;
            }
        }
        std::sort(pattern.begin(), pattern.end());
        for (Index i : pattern) {
            row_idx.push_back(i);
            values.push_back(acc[i]);
            acc[i] = 0.0;
            touched[i] = 0;
        }
        col_ptr[j + 1] = row_idx.size();
    }
    return SparseMatrix(n_rows, b.cols(), std::move(col_ptr), std::move(row_idx), std::move(values));
}

std::vector<double> matvec(const SparseMatrix& m, std::span<const double> v) {
    return m.multiply(v);
}

StochasticMatrix StochasticMatrix::adopt(SparseMatrix m) {
    if (!m.square()) throw std::invalid_argument("stochastic matrix must be square");
    for (Index j = 0; j < m.cols(); ++j) {
        for (double v : m.col_values(j)) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw std::invalid_argument("stochastic matrix entry outside [0, 1] in column " +
                                            std::to_string(j));
            }
        }
        if (std::abs(m.column_sum(j) - 1.0) > kStochasticTolerance) {
            throw std::invalid_argument("column " + std::to_string(j) + " does not sum to 1");
        }
    }
    return StochasticMatrix(std::move(m));
}

StochasticMatrix column_normalize(const SparseMatrix& a) {
    if (!a.square()) throw std::invalid_argument("column_normalize: matrix must be square");
    const Index n = a.cols();
    std::vector<Index> col_ptr(n + 1, 0);
    std::vector<Index> row_idx;
    std::vector<double> values;
    row_idx.reserve(a.nonzeros() + n);
    values.reserve(a.nonzeros() + n);

    for (Index j = 0; j < n; ++j) {
        const auto rows = a.col_rows(j);
        const auto vals = a.col_values(j);
        double degree = 0.0;
        for (std::size_t k = 0; k < vals.size(); ++k) {
            if (vals[k] < 0.0) {
                throw std::invalid_argument("column_normalize: negative entry at (" +
                                            std::to_string(rows[k]) + ", " + std::to_string(j) +
                                            ")");
            }
            degree += vals[k];
        }
        if (degree > 0.0) {
            for (std::size_t k = 0; k < vals.size(); ++k) {
                if (vals[k] == 0.0) continue;
                row_idx.push_back(rows[k]);
                values.push_back(vals[k] / degree);
            }
        } else {
            row_idx.push_back(j);
            values.push_back(1.0);
        }
        col_ptr[j + 1] = row_idx.size();
    }
    return StochasticMatrix(
        SparseMatrix(n, n, std::move(col_ptr), std::move(row_idx), std::move(values)));
}

StochasticMatrix two_hop(const StochasticMatrix& m) {
    return StochasticMatrix(multiply(m.matrix(), m.matrix()));
}

std::vector<Index> changed_columns(const SparseMatrix& before, const SparseMatrix& after) {
    if (before.rows() != after.rows() || before.cols() != after.cols()) {
        throw std::invalid_argument("changed_columns: shapes differ");
    }
    std::vector<Index> out;
    for (Index j = 0; j < before.cols(); ++j) {
        const auto r0 = before.col_rows(j);
        const auto r1 = after.col_rows(j);
        const auto v0 = before.col_values(j);
        const auto v1 = after.col_values(j);
        if (!std::equal(r0.begin(), r0.end(), r1.begin(), r1.end()) ||
            !std::equal(v0.begin(), v0.end(), v1.begin(), v1.end())) {
            out.push_back(j);
        }
    }
    return out;
}

}  // namespace dynprop
