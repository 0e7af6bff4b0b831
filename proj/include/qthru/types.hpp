#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace qthru {

using Vec = std::vector<double>;

/// Dense row-major matrix, sized once at construction.
template <class T>
class Matrix {
  public:
    Matrix() = default;
    Matrix(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    T& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    const T& operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    std::vector<T> row_sums() const {
        std::vector<T> s(rows_, T{});
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) s[i] += (*this)(i, j);
        return s;
    }
    std::vector<T> col_sums() const {
        std::vector<T> s(cols_, T{});
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) s[j] += (*this)(i, j);
        return s;
    }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using Mat = Matrix<double>;
using MatI = Matrix<long long>;

inline double l1_norm(const Vec& v) {
    double s = 0;
    for (double x : v) s += std::fabs(x);
    return s;
}

inline double l1_dist(const Vec& a, const Vec& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

inline double sum(const Vec& v) {
    double s = 0;
    for (double x : v) s += x;
    return s;
}

inline long long sum_ll(const std::vector<long long>& v) {
    long long s = 0;
    for (long long x : v) s += x;
    return s;
}

}  // namespace qthru
