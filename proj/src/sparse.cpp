#include "stcos/sparse.hpp"

#include <algorithm>
#include <stdexcept>

#include "stcos/threads.hpp"

namespace stcos {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets)
    : rows_(rows), cols_(cols) {
    for (const auto& t : triplets) {
        if (t.row >= rows || t.col >= cols)
            throw std::invalid_argument("SparseMatrix: triplet index out of range");
    }
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    row_start_.assign(rows_ + 1, 0);
    col_index_.reserve(triplets.size());
    values_.reserve(triplets.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
        row_start_[i] = values_.size();
        while (k < triplets.size() && triplets[k].row == i) {
            double v = triplets[k].value;
            const std::size_t j = triplets[k].col;
            ++k;
            while (k < triplets.size() && triplets[k].row == i && triplets[k].col == j) {
                v += triplets[k].value;
                ++k;
            }
            if (v != 0.0) {
                col_index_.push_back(j);
                values_.push_back(v);
            }
        }
    }
    row_start_[rows_] = values_.size();
}

SparseMatrix SparseMatrix::from_dense(const Matrix& a, double drop_tol) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (std::abs(a(i, j)) > drop_tol) t.push_back({i, j, a(i, j)});
    return SparseMatrix(a.rows(), a.cols(), std::move(t));
}

Vec SparseMatrix::matvec(const Vec& x) const {
    if (x.size() != cols_) throw std::invalid_argument("sparse matvec: dimension mismatch");
    Vec out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k)
            s += values_[k] * x[col_index_[k]];
        out[i] = s;
    }
    return out;
}

Vec SparseMatrix::tmatvec(const Vec& x) const {
    if (x.size() != rows_) throw std::invalid_argument("sparse tmatvec: dimension mismatch");
    Vec out(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k)
            out[col_index_[k]] += values_[k] * xi;
    }
    return out;
}

Matrix SparseMatrix::matmul_dense(const Matrix& b) const {
    if (b.rows() != cols_) throw std::invalid_argument("sparse matmul: dimension mismatch");
    Matrix out(rows_, b.cols());
    const int nt = threads::count();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1 && rows_ > 32)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(rows_); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* orow = out.row_ptr(i);
        for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) {
            const double v = values_[k];
            const double* brow = b.row_ptr(col_index_[k]);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += v * brow[j];
        }
    }
    return out;
}

Matrix SparseMatrix::crossprod() const {
    Matrix out(cols_, cols_);
    // Row-by-row outer products; serial so the accumulation order is fixed.
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t ka = row_start_[i]; ka < row_start_[i + 1]; ++ka) {
            const double va = values_[ka];
            const std::size_t ja = col_index_[ka];
            double* orow = out.row_ptr(ja);
            for (std::size_t kb = row_start_[i]; kb < row_start_[i + 1]; ++kb)
                orow[col_index_[kb]] += va * values_[kb];
        }
    }
    return out;
}

Matrix SparseMatrix::to_dense() const {
    Matrix out(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k)
            out(i, col_index_[k]) = values_[k];
    return out;
}

Vec SparseMatrix::row_sums() const {
    Vec out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) out[i] += values_[k];
    return out;
}

Vec SparseMatrix::col_sums() const {
    Vec out(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k)
            out[col_index_[k]] += values_[k];
    return out;
}

double SparseMatrix::coeff(std::size_t i, std::size_t j) const {
    for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k)
        if (col_index_[k] == j) return values_[k];
    return 0.0;
}

SparseMatrix SparseMatrix::vstack(const std::vector<SparseMatrix>& blocks) {
    if (blocks.empty()) return SparseMatrix();
    const std::size_t cols = blocks.front().cols();
    std::size_t rows = 0;
    std::vector<Triplet> t;
    for (const auto& b : blocks) {
        if (b.cols() != cols) throw std::invalid_argument("vstack: column mismatch");
        for (std::size_t i = 0; i < b.rows(); ++i)
            for (std::size_t k = b.row_start()[i]; k < b.row_start()[i + 1]; ++k)
                t.push_back({rows + i, b.col_index()[k], b.values()[k]});
        rows += b.rows();
    }
    return SparseMatrix(rows, cols, std::move(t));
}

namespace ref {
Matrix sparse_matmul_dense_serial(const SparseMatrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* orow = out.row_ptr(i);
        for (std::size_t k = a.row_start()[i]; k < a.row_start()[i + 1]; ++k) {
            const double v = a.values()[k];
            const double* brow = b.row_ptr(a.col_index()[k]);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += v * brow[j];
        }
    }
    return out;
}
} // namespace ref

} // namespace stcos
