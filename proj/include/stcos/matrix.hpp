#pragma once

#include <cstddef>
#include <vector>

namespace stcos {

using Vec = std::vector<double>;

// Dense row-major matrix. The handful of kernels every module leans on
// (products, cross products) live here; heavier factorizations are in
// linalg.hpp.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    Vec& data() { return data_; }
    const Vec& data() const { return data_; }

    bool empty() const { return rows_ == 0 || cols_ == 0; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vec data_;
};

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b
Matrix crossprod(const Matrix& a, const Matrix& b);
// a^T * a (symmetric)
Matrix crossprod(const Matrix& a);
Matrix transpose(const Matrix& a);

Vec matvec(const Matrix& a, const Vec& x);
Vec tmatvec(const Matrix& a, const Vec& x); // a^T * x

Matrix add(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double s);
void add_to_diagonal(Matrix& a, double s);
double trace(const Matrix& a);
Matrix symmetrized(const Matrix& a); // (A + A^T)/2

double dot(const Vec& a, const Vec& b);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Serial reference implementations; the OpenMP kernels above must agree
// with these bitwise.
namespace ref {
Matrix matmul_serial(const Matrix& a, const Matrix& b);
}

} // namespace stcos
