#pragma once

#include <cstddef>
#include <vector>

#include "stcos/matrix.hpp"

namespace stcos {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

// Compressed-row sparse matrix assembled from triplets. Duplicate (i,j)
// entries are summed during assembly; explicit zeros are dropped.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);

    static SparseMatrix from_dense(const Matrix& a, double drop_tol = 0.0);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    const std::vector<std::size_t>& row_start() const { return row_start_; }
    const std::vector<std::size_t>& col_index() const { return col_index_; }
    const std::vector<double>& values() const { return values_; }

    Vec matvec(const Vec& x) const;
    Vec tmatvec(const Vec& x) const;
    Matrix matmul_dense(const Matrix& b) const;   // this * B
    Matrix crossprod() const;                     // this^T * this, dense result
    Matrix to_dense() const;
    Vec row_sums() const;
    Vec col_sums() const;
    double coeff(std::size_t i, std::size_t j) const;

    // Stack blocks vertically; all blocks must share a column count.
    static SparseMatrix vstack(const std::vector<SparseMatrix>& blocks);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_start_; // rows_+1
    std::vector<std::size_t> col_index_;
    std::vector<double> values_;
};

namespace ref {
Matrix sparse_matmul_dense_serial(const SparseMatrix& a, const Matrix& b);
}

} // namespace stcos
