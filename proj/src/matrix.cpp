#include "stcos/matrix.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "stcos/threads.hpp"

namespace stcos {

namespace {
void check_mul(std::size_t ac, std::size_t br, const char* what) {
    if (ac != br) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}
} // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_mul(a.cols(), b.rows(), "matmul");
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Matrix out(n, m);
    const int nt = threads::count();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1 && n > 16)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* orow = out.row_ptr(i);
        const double* arow = a.row_ptr(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            if (aip == 0.0) continue;
            const double* brow = b.row_ptr(p);
            for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
        }
    }
    return out;
}

namespace ref {
Matrix matmul_serial(const Matrix& a, const Matrix& b) {
    check_mul(a.cols(), b.rows(), "matmul");
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Matrix out(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        double* orow = out.row_ptr(i);
        const double* arow = a.row_ptr(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            if (aip == 0.0) continue;
            const double* brow = b.row_ptr(p);
            for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
        }
    }
    return out;
}
} // namespace ref

Matrix crossprod(const Matrix& a, const Matrix& b) {
    check_mul(a.rows(), b.rows(), "crossprod");
    const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
    Matrix out(n, m);
    const int nt = threads::count();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1 && n > 16)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* orow = out.row_ptr(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double api = a(p, i);
            if (api == 0.0) continue;
            const double* brow = b.row_ptr(p);
            for (std::size_t j = 0; j < m; ++j) orow[j] += api * brow[j];
        }
    }
    return out;
}

Matrix crossprod(const Matrix& a) {
    return crossprod(a, a);
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Vec matvec(const Matrix& a, const Vec& x) {
    check_mul(a.cols(), x.size(), "matvec");
    Vec out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += arow[j] * x[j];
        out[i] = s;
    }
    return out;
}

Vec tmatvec(const Matrix& a, const Vec& x) {
    check_mul(a.rows(), x.size(), "tmatvec");
    Vec out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* arow = a.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] += arow[j] * xi;
    }
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("add: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

Matrix scaled(const Matrix& a, double s) {
    Matrix out = a;
    for (double& v : out.data()) v *= s;
    return out;
}

void add_to_diagonal(Matrix& a, double s) {
    const std::size_t n = a.rows() < a.cols() ? a.rows() : a.cols();
    for (std::size_t i = 0; i < n; ++i) a(i, i) += s;
}

double trace(const Matrix& a) {
    double t = 0.0;
    const std::size_t n = a.rows() < a.cols() ? a.rows() : a.cols();
    for (std::size_t i = 0; i < n; ++i) t += a(i, i);
    return t;
}

Matrix symmetrized(const Matrix& a) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = 0.5 * (a(i, j) + a(j, i));
    return out;
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double d = std::fabs(a.data()[i] - b.data()[i]);
        if (d > m) m = d;
    }
    return m;
}

} // namespace stcos
