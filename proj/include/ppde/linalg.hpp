#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ppde {

using Vec = std::vector<double>;

// Dense row-major d x d matrix. Dimensions here are tiny (the number of
// driving coordinates), so no linear-algebra backend is warranted.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(int d, double fill = 0.0) : d_(d), a_(static_cast<size_t>(d) * d, fill) {}

    static Matrix identity(int d, double scale = 1.0) {
        Matrix m(d);
        for (int i = 0; i < d; ++i) m(i, i) = scale;
        return m;
    }

    int dim() const { return d_; }
    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * d_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * d_ + j]; }

    double trace() const {
        double t = 0.0;
        for (int i = 0; i < d_; ++i) t += (*this)(i, i);
        return t;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::abs(v));
        return m;
    }

    bool is_symmetric(double tol) const {
        for (int i = 0; i < d_; ++i)
            for (int j = i + 1; j < d_; ++j)
                if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
        return true;
    }

    // In-place (A + A^T)/2.
    void symmetrize() {
        for (int i = 0; i < d_; ++i)
            for (int j = i + 1; j < d_; ++j) {
                const double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
                (*this)(i, j) = v;
                (*this)(j, i) = v;
            }
    }

    const std::vector<double>& data() const { return a_; }

private:
    int d_ = 0;
    std::vector<double> a_;
};

inline double euclidean_norm(const double* x, int d) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += x[c] * x[c];
    return std::sqrt(s);
}

}  // namespace ppde
