#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sphm {

/// Dense row-major matrix of 64-bit reals.
///
/// Row-major layout is part of the on-disk contract: checkpoints and CSV
/// exports index entry (r, c) at data()[r * cols() + c].
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const;
    std::string shape_str() const;  // e.g. "3x4"

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Throws std::invalid_argument naming both shapes when a.cols() != b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

/// Euclidean norm of each column.
std::vector<double> column_norms(const Matrix& m);

/// Rescales every column to unit norm. Columns with norm below `epsilon` map
/// to the first standard basis vector so downstream math never sees NaN.
/// Columns already within 1e-12 of unit norm are passed through verbatim,
/// which makes the operation exactly idempotent.
Matrix normalize_columns(const Matrix& m, double epsilon = 1e-12);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

/// Deterministic pairwise-tree summation; the result does not depend on how
/// callers might split the work, so parallel reductions stay reproducible.
double pairwise_sum(std::span<const double> v);

/// Throws std::runtime_error if the matrix holds a NaN or infinity.
void require_finite(const Matrix& m, const char* what);

}  // namespace sphm
