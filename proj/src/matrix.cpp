#include "ckd/matrix.hpp"

#include "ckd/error.hpp"

#include <algorithm>

namespace ckd {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols) {
    if (rows == 0 || cols == 0) {
        throw ShapeError("matrix dimensions must be positive, got " + std::to_string(rows) +
                         "x" + std::to_string(cols));
    }
    data_.assign(rows * cols, fill);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) {
        throw ShapeError("matrix dimensions must be positive, got " + std::to_string(rows) +
                         "x" + std::to_string(cols));
    }
    if (data_.size() != rows * cols) {
        throw ShapeError("matrix " + shape_string() + " needs " + std::to_string(rows * cols) +
                         " values, got " + std::to_string(data_.size()));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    if (rows_ == 0 || cols_ == 0) {
        throw ShapeError("matrix literal must be non-empty");
    }
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw ShapeError("ragged matrix literal");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

std::string Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul shape mismatch: " + a.shape_string() + " * " + b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    // i-k-j order keeps the inner loop contiguous in both b and out.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out_row = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            auto b_row = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out_row[j] += aik * b_row[j];
            }
        }
    }
    return out;
}

Matrix elementwise(const Matrix& a, const Matrix& b, ElementwiseOp op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError("elementwise shape mismatch: " + a.shape_string() + " vs " +
                         b.shape_string());
    }
    Matrix out(a.rows(), a.cols());
    auto x = a.data();
    auto y = b.data();
    auto z = out.data();
    switch (op) {
    case ElementwiseOp::add:
        std::transform(x.begin(), x.end(), y.begin(), z.begin(), std::plus<>{});
        break;
    case ElementwiseOp::sub:
        std::transform(x.begin(), x.end(), y.begin(), z.begin(), std::minus<>{});
        break;
    case ElementwiseOp::mul:
        std::transform(x.begin(), x.end(), y.begin(), z.begin(), std::multiplies<>{});
        break;
    }
    return out;
}

Matrix map_scalar(const Matrix& a, const std::function<double(double)>& f) {
    Matrix out(a.rows(), a.cols());
    std::transform(a.data().begin(), a.data().end(), out.data().begin(), f);
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(j, i) = a(i, j);
        }
    }
    return out;
}

} // namespace ckd
