#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dynprop {

class StochasticMatrix;

using Index = std::size_t;

struct Coordinate {
    Index row;
    Index col;
    double value;
};

// =============================================================================
// SparseMatrix
//
// Compressed sparse column storage. Row indices are strictly increasing inside
// each column and no coordinate appears twice. Immutable after construction.
// =============================================================================
class SparseMatrix {
public:
    SparseMatrix() = default;

    // Zero matrix of the given shape.
    SparseMatrix(Index n_rows, Index n_cols);

    // Duplicates are merged by addition. Throws std::out_of_range naming the
    // first coordinate outside the bounds, std::invalid_argument on a
    // non-finite value.
    static SparseMatrix from_coordinates(Index n_rows, Index n_cols,
                                         std::span<const Coordinate> coords);

    static SparseMatrix identity(Index n);

    Index rows() const { return n_rows_; }
    Index cols() const { return n_cols_; }
    Index nonzeros() const { return values_.size(); }
    bool square() const { return n_rows_ == n_cols_; }

    std::span<const Index> col_rows(Index col) const {
        return {row_idx_.data() + col_ptr_[col], col_ptr_[col + 1] - col_ptr_[col]};
    }
    std::span<const double> col_values(Index col) const {
        return {values_.data() + col_ptr_[col], col_ptr_[col + 1] - col_ptr_[col]};
    }

    // Entry lookup by binary search inside the column.
    double at(Index row, Index col) const;

    double column_sum(Index col) const;

    // Coordinates in column-major order.
    std::vector<Coordinate> coordinates() const;

    // Row-major dense copy, for tests and small diagnostics.
    std::vector<double> to_dense() const;

    // y = A v. Summation order is fixed by the storage, so repeated calls are
    // bit-identical. Throws std::invalid_argument on a size mismatch.
    std::vector<double> multiply(std::span<const double> v) const;

    // y = scale * A v written into `out` (resized). Columns with v[j] == 0 are skipped.
    void multiply_into(std::span<const double> v, double scale, std::vector<double>& out) const;

    friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

private:
    SparseMatrix(Index n_rows, Index n_cols, std::vector<Index> col_ptr,
                 std::vector<Index> row_idx, std::vector<double> values);

    friend SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);
    friend class StochasticMatrix;
    friend StochasticMatrix column_normalize(const SparseMatrix& a);

    Index n_rows_ = 0;
    Index n_cols_ = 0;
    std::vector<Index> col_ptr_{0};
    std::vector<Index> row_idx_;
    std::vector<double> values_;
};

// Exact sparse product a * b (Gustavson, column by column).
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

// Free-function form of SparseMatrix::multiply.
std::vector<double> matvec(const SparseMatrix& m, std::span<const double> v);

// =============================================================================
// StochasticMatrix
//
// Square, entries in [0, 1], every column summing to 1 within
// kStochasticTolerance. Only obtainable through column_normalize / two_hop or
// the checked adopt().
// =============================================================================
class StochasticMatrix {
public:
    static constexpr double kStochasticTolerance = 1e-12;

    // Validates `m` and wraps it. Throws std::invalid_argument if it is not
    // square and column-stochastic.
    static StochasticMatrix adopt(SparseMatrix m);

    const SparseMatrix& matrix() const { return inner_; }
    Index size() const { return inner_.rows(); }

    friend bool operator==(const StochasticMatrix&, const StochasticMatrix&) = default;

private:
    explicit StochasticMatrix(SparseMatrix m) : inner_(std::move(m)) {}

    friend StochasticMatrix column_normalize(const SparseMatrix& a);
    friend StochasticMatrix two_hop(const StochasticMatrix& m);

    SparseMatrix inner_;
};

// M = A D^-1 with the degree division fused. A column with no entries becomes
// the basis column e_j, i.e. a dangling node keeps its walker. Throws
// std::invalid_argument for a non-square input or a negative entry.
StochasticMatrix column_normalize(const SparseMatrix& a);

// M2 = M * M.
StochasticMatrix two_hop(const StochasticMatrix& m);

// Columns where the two matrices differ in structure or value, ascending.
// Throws std::invalid_argument when the shapes differ.
std::vector<Index> changed_columns(const SparseMatrix& before, const SparseMatrix& after);

}  // namespace dynprop
