#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace sfrn {

// Dense row-major float64 matrix. Flat buffer, data.size() == rows*cols.
struct Matrix {
    int rows{0};
    int cols{0};
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    size_t size() const { return data.size(); }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    void zero() { fill(0.0); }
};

std::string shape_str(const Matrix& m);

enum class Ewise { mul, add, sub };

enum class Unary { tanh, sigmoid, tanh_prime_from_act, sigmoid_prime_from_act };

// out = a * b, a: (m,k), b: (k,n) -> (m,n).
// Per output element the k-sum runs left to right; this order is part of the
// contract (reproducible bit patterns), do not reorder.
void matmul_into(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate = false);
Matrix matmul(const Matrix& a, const Matrix& b);

// out = a^T * b without materializing the transpose, a: (k,m), b: (k,n) -> (m,n).
// Same left-to-right k-order per element as matmul(transpose(a), b).
void matmul_at_into(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate = false);
Matrix matmul_at(const Matrix& a, const Matrix& b);

// out = a * b^T, a: (m,k), b: (n,k) -> (m,n).
void matmul_bt_into(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate = false);
Matrix matmul_bt(const Matrix& a, const Matrix& b);

void ewise_into(const Matrix& a, const Matrix& b, Ewise kind, Matrix& out);
Matrix ewise(const Matrix& a, const Matrix& b, Ewise kind);

void map_into(const Matrix& a, Unary fn, Matrix& out);
Matrix map(const Matrix& a, Unary fn);

// bias: (1,n) added to every row of a: (m,n).
void row_broadcast_add_into(const Matrix& a, const Matrix& bias, Matrix& out);
Matrix row_broadcast_add(const Matrix& a, const Matrix& bias);

// scale: (m,1); row i of a multiplied by scale(i,0).
void col_broadcast_mul_into(const Matrix& a, const Matrix& scale, Matrix& out);
Matrix col_broadcast_mul(const Matrix& a, const Matrix& scale);

Matrix transpose(const Matrix& a);

// out(0,j) = sum over rows of a(:,j); (m,n) -> (1,n).
void col_sums_into(const Matrix& a, Matrix& out, bool accumulate = false);
Matrix col_sums(const Matrix& a);

bool all_finite(const Matrix& a);

}  // namespace sfrn
