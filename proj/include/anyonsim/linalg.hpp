// Minimal dense complex matrix type used for row unitaries, F-matrices and
// logical gates.  Dimensions in this simulator stay below a few hundred, so a
// plain row-major std::vector backing is all that is needed.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "anyonsim/scalar.hpp"

namespace anyonsim {

class Mat {
  public:
    Mat() : rows_(0), cols_(0) {}
    Mat(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, Cx{0.0, 0.0}) {}

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = Cx{1.0, 0.0};
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Cx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Cx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    friend Mat operator*(const Mat& a, const Mat& b) {
        if (a.cols_ != b.rows_) throw std::invalid_argument("Mat: shape mismatch in product");
        Mat out(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                Cx aik = a(i, k);
                if (aik == Cx{0.0, 0.0}) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
            }
        return out;
    }

    std::vector<Cx> apply(const std::vector<Cx>& v) const {
        if (v.size() != cols_) throw std::invalid_argument("Mat: shape mismatch in apply");
        std::vector<Cx> out(rows_, Cx{0.0, 0.0});
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) out[i] += (*this)(i, j) * v[j];
        return out;
    }

    Mat adjoint() const {
        Mat out(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
        return out;
    }

    Mat scaled(Cx s) const {
        Mat out = *this;
        for (auto& z : out.data_) z *= s;
        return out;
    }

    double max_abs_diff(const Mat& other) const {
        if (rows_ != other.rows_ || cols_ != other.cols_)
            throw std::invalid_argument("Mat: shape mismatch in diff");
        double m = 0.0;
        for (std::size_t i = 0; i < data_.size(); ++i)
            m = std::max(m, std::abs(data_[i] - other.data_[i]));
        return m;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& z : data_) m = std::max(m, std::abs(z));
        return m;
    }

    // Largest entry of U U^dagger - I; zero for a unitary.
    double unitarity_defect() const {
        if (rows_ != cols_) return 1.0;
        Mat prod = (*this) * adjoint();
        return prod.max_abs_diff(identity(rows_));
    }

    bool is_unitary(double tol = kDefaultTol) const { return unitarity_defect() <= tol; }

    // Numerical rank by Gaussian elimination with partial pivoting.
    std::size_t rank(double tol = kDefaultTol) const {
        Mat work = *this;
        std::size_t rank = 0;
        std::size_t row = 0;
        for (std::size_t col = 0; col < cols_ && row < rows_; ++col) {
            std::size_t pivot = row;
            for (std::size_t r = row + 1; r < rows_; ++r)
                if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
            if (std::abs(work(pivot, col)) <= tol) continue;
            if (pivot != row)
                for (std::size_t c = 0; c < cols_; ++c) std::swap(work(pivot, c), work(row, c));
            for (std::size_t r = row + 1; r < rows_; ++r) {
                Cx f = work(r, col) / work(row, col);
                for (std::size_t c = col; c < cols_; ++c) work(r, c) -= f * work(row, c);
            }
            ++rank;
            ++row;
        }
        return rank;
    }

  private:
    std::size_t rows_, cols_;
    std::vector<Cx> data_;
};

}  // namespace anyonsim
