#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace resilq {

// Dense row-major matrix of doubles. Shapes are fixed at construction and
// every binary operation asserts conformability; there is no resizing.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            assert(row.size() == cols_);
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool is_square() const { return rows_ == cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    Matrix& operator+=(const Matrix& rhs) {
        assert(rows_ == rhs.rows_ && cols_ == rhs.cols_);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& rhs) {
        assert(rows_ == rhs.rows_ && cols_ == rhs.cols_);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
        return *this;
    }
    Matrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix lhs, const Matrix& rhs) { return lhs += rhs; }
    friend Matrix operator-(Matrix lhs, const Matrix& rhs) { return lhs -= rhs; }
    friend Matrix operator*(Matrix lhs, double s) { return lhs *= s; }
    friend Matrix operator*(double s, Matrix rhs) { return rhs *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        assert(a.cols_ == b.rows_);
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        }
        return c;
    }

    // Copies `src` into this matrix with its top-left corner at (i0, j0).
    void set_block(std::size_t i0, std::size_t j0, const Matrix& src) {
        assert(i0 + src.rows_ <= rows_ && j0 + src.cols_ <= cols_);
        for (std::size_t i = 0; i < src.rows_; ++i)
            for (std::size_t j = 0; j < src.cols_; ++j) (*this)(i0 + i, j0 + j) = src(i, j);
    }

    Matrix block(std::size_t i0, std::size_t j0, std::size_t nr, std::size_t nc) const {
        assert(i0 + nr <= rows_ && j0 + nc <= cols_);
        Matrix out(nr, nc);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j) out(i, j) = (*this)(i0 + i, j0 + j);
        return out;
    }

    const std::vector<double>& flat() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix hcat(const Matrix& a, const Matrix& b) {
    assert(a.rows() == b.rows());
    Matrix out(a.rows(), a.cols() + b.cols());
    out.set_block(0, 0, a);
    out.set_block(0, a.cols(), b);
    return out;
}

inline Matrix vcat(const Matrix& a, const Matrix& b) {
    assert(a.cols() == b.cols());
    Matrix out(a.rows() + b.rows(), a.cols());
    out.set_block(0, 0, a);
    out.set_block(a.rows(), 0, b);
    return out;
}

inline Matrix block2x2(const Matrix& a11, const Matrix& a12, const Matrix& a21,
                       const Matrix& a22) {
    return vcat(hcat(a11, a12), hcat(a21, a22));
}

} // namespace resilq
