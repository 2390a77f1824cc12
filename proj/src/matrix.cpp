#include "sphm/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace sphm {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw std::invalid_argument("from_rows: ragged row lengths");
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: incompatible shapes " + a.shape_str() + " and " +
                                    b.shape_str());
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* out_row = out.data().data() + i * out.cols();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* b_row = b.data().data() + k * b.cols();
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
        }
    }
    require_finite(out, "matmul result");
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    return out;
}

std::vector<double> column_norms(const Matrix& m) {
    std::vector<double> norms(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) norms[j] += m(i, j) * m(i, j);
    for (double& n : norms) n = std::sqrt(n);
    return norms;
}

Matrix normalize_columns(const Matrix& m, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("normalize_columns: epsilon must be > 0");
    Matrix out = m;
    const std::vector<double> norms = column_norms(m);
    for (std::size_t j = 0; j < m.cols(); ++j) {
        const double n = norms[j];
        if (n < epsilon) {
            // Degenerate column: pin to the first axis instead of emitting NaN.
            for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) = 0.0;
            if (m.rows() > 0) out(0, j) = 1.0;
        } else if (std::abs(n - 1.0) > 1e-12) {
            for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) = m(i, j) / n;
        }
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

void require_finite(const Matrix& m, const char* what) {
    if (!m.all_finite())
        throw std::runtime_error(std::string(what) + ": non-finite entries in " + m.shape_str() +
                                 " matrix");
}

}  // namespace sphm
