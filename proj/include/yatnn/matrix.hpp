#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace yatnn {

// Dense row-major matrix of 64-bit floats. The universal tensor of the
// library: inputs, weights, activations and gradients are all Matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> r);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    bool operator==(const Matrix& o) const = default;
};

Matrix mat_mul(const Matrix& a, const Matrix& b);

// C = A * B^T without materializing the transpose; the hot path of every
// dense and yat layer.
Matrix mat_mul_bt(const Matrix& a, const Matrix& b);

// C = A^T * B, used by backward passes.
Matrix mat_mul_at(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

bool all_finite(const Matrix& m);
bool all_finite(std::span<const double> v);

// Throws NumericError naming `what` if any entry is not finite.
void require_finite(const Matrix& m, const std::string& what);

}  // namespace yatnn
