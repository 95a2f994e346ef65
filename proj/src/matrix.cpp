#include "sfrn/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace sfrn {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

namespace {

[[noreturn]] void dim_error(const char* op, const Matrix& a, const Matrix& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) +
                                " and " + shape_str(b));
}

void require_out_shape(const char* op, const Matrix& out, int r, int c) {
    if (out.rows != r || out.cols != c) {
        throw std::invalid_argument(std::string(op) + ": output buffer is " + shape_str(out) +
                                    ", expected " + std::to_string(r) + "x" + std::to_string(c));
    }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void matmul_into(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
    if (a.cols != b.rows) dim_error("matmul", a, b);
    require_out_shape("matmul", out, a.rows, b.cols);
    const int m = a.rows, k = a.cols, n = b.cols;
    if (!accumulate) out.zero();
    // i-k-j order: each out(i,j) accumulates over k left to right, and the
    // inner j loop streams rows of b.
    for (int i = 0; i < m; ++i) {
        double* orow = out.row(i);
        const double* arow = a.row(i);
        for (int kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const double* brow = b.row(kk);
            for (int j = 0; j < n; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) dim_error("matmul", a, b);
    Matrix out(a.rows, b.cols);
    matmul_into(a, b, out);
    return out;
}

void matmul_at_into(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
    if (a.rows != b.rows) dim_error("matmul_at", a, b);
    require_out_shape("matmul_at", out, a.cols, b.cols);
    const int k = a.rows, m = a.cols, n = b.cols;
    if (!accumulate) out.zero();
    // k-i-j order keeps each out(i,j) summing over k left to right, exactly
    // as matmul(transpose(a), b) would.
    for (int kk = 0; kk < k; ++kk) {
        const double* arow = a.row(kk);
        const double* brow = b.row(kk);
        for (int i = 0; i < m; ++i) {
            const double aki = arow[i];
            double* orow = out.row(i);
            for (int j = 0; j < n; ++j) {
                orow[j] += aki * brow[j];
            }
        }
    }
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) dim_error("matmul_at", a, b);
    Matrix out(a.cols, b.cols);
    matmul_at_into(a, b, out);
    return out;
}

void matmul_bt_into(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
    if (a.cols != b.cols) dim_error("matmul_bt", a, b);
    require_out_shape("matmul_bt", out, a.rows, b.rows);
    // Runs the matmul kernel on a materialized transpose so the per-element
    // operation sequence is the same one matmul(a, transpose(b)) performs.
    const Matrix bt = transpose(b);
    matmul_into(a, bt, out, accumulate);
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) dim_error("matmul_bt", a, b);
    Matrix out(a.rows, b.rows);
    matmul_bt_into(a, b, out);
    return out;
}

void ewise_into(const Matrix& a, const Matrix& b, Ewise kind, Matrix& out) {
    if (!a.same_shape(b)) dim_error("ewise", a, b);
    require_out_shape("ewise", out, a.rows, a.cols);
    const size_t n = a.size();
    switch (kind) {
        case Ewise::mul:
            for (size_t i = 0; i < n; ++i) out.data[i] = a.data[i] * b.data[i];
            break;
        case Ewise::add:
            for (size_t i = 0; i < n; ++i) out.data[i] = a.data[i] + b.data[i];
            break;
        case Ewise::sub:
            for (size_t i = 0; i < n; ++i) out.data[i] = a.data[i] - b.data[i];
            break;
    }
}

Matrix ewise(const Matrix& a, const Matrix& b, Ewise kind) {
    if (!a.same_shape(b)) dim_error("ewise", a, b);
    Matrix out(a.rows, a.cols);
    ewise_into(a, b, kind, out);
    return out;
}

void map_into(const Matrix& a, Unary fn, Matrix& out) {
    require_out_shape("map", out, a.rows, a.cols);
    const size_t n = a.size();
    switch (fn) {
        case Unary::tanh:
            for (size_t i = 0; i < n; ++i) out.data[i] = std::tanh(a.data[i]);
            break;
        case Unary::sigmoid:
            for (size_t i = 0; i < n; ++i) out.data[i] = sigmoid(a.data[i]);
            break;
        case Unary::tanh_prime_from_act:
            // derivative from the stored activation: tanh'(v) = 1 - v^2
            for (size_t i = 0; i < n; ++i) out.data[i] = 1.0 - a.data[i] * a.data[i];
            break;
        case Unary::sigmoid_prime_from_act:
            // sigma'(v) = v * (1 - v)
            for (size_t i = 0; i < n; ++i) out.data[i] = a.data[i] * (1.0 - a.data[i]);
            break;
    }
}

Matrix map(const Matrix& a, Unary fn) {
    Matrix out(a.rows, a.cols);
    map_into(a, fn, out);
    return out;
}

void row_broadcast_add_into(const Matrix& a, const Matrix& bias, Matrix& out) {
    if (bias.rows != 1 || bias.cols != a.cols) dim_error("row_broadcast_add", a, bias);
    require_out_shape("row_broadcast_add", out, a.rows, a.cols);
    const double* brow = bias.row(0);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (int j = 0; j < a.cols; ++j) orow[j] = arow[j] + brow[j];
    }
}

Matrix row_broadcast_add(const Matrix& a, const Matrix& bias) {
    if (bias.rows != 1 || bias.cols != a.cols) dim_error("row_broadcast_add", a, bias);
    Matrix out(a.rows, a.cols);
    row_broadcast_add_into(a, bias, out);
    return out;
}

void col_broadcast_mul_into(const Matrix& a, const Matrix& scale, Matrix& out) {
    if (scale.cols != 1 || scale.rows != a.rows) dim_error("col_broadcast_mul", a, scale);
    require_out_shape("col_broadcast_mul", out, a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double s = scale(i, 0);
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (int j = 0; j < a.cols; ++j) orow[j] = arow[j] * s;
    }
}

Matrix col_broadcast_mul(const Matrix& a, const Matrix& scale) {
    if (scale.cols != 1 || scale.rows != a.rows) dim_error("col_broadcast_mul", a, scale);
    Matrix out(a.rows, a.cols);
    col_broadcast_mul_into(a, scale, out);
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    }
    return out;
}

void col_sums_into(const Matrix& a, Matrix& out, bool accumulate) {
    require_out_shape("col_sums", out, 1, a.cols);
    if (!accumulate) out.zero();
    double* orow = out.row(0);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        for (int j = 0; j < a.cols; ++j) orow[j] += arow[j];
    }
}

Matrix col_sums(const Matrix& a) {
    Matrix out(1, a.cols);
    col_sums_into(a, out);
    return out;
}

bool all_finite(const Matrix& a) {
    for (double v : a.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace sfrn
