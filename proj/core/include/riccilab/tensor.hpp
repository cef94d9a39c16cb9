#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <vector>

namespace riccilab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Dense rank-3 array, zero-initialized, index order (i, j, k).
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(int d0, int d1, int d2)
        : d0_(d0), d1_(d1), d2_(d2), v_(static_cast<size_t>(d0) * d1 * d2, 0.0) {}

    double& operator()(int i, int j, int k) { return v_[idx(i, j, k)]; }
    double operator()(int i, int j, int k) const { return v_[idx(i, j, k)]; }

    int dim0() const { return d0_; }
    int dim1() const { return d1_; }
    int dim2() const { return d2_; }
    void setZero() { std::fill(v_.begin(), v_.end(), 0.0); }

    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

private:
    size_t idx(int i, int j, int k) const {
        assert(i >= 0 && i < d0_ && j >= 0 && j < d1_ && k >= 0 && k < d2_);
        return (static_cast<size_t>(i) * d1_ + j) * d2_ + k;
    }
    int d0_ = 0, d1_ = 0, d2_ = 0;
    std::vector<double> v_;
};

/// Dense rank-4 array, zero-initialized, index order (i, j, k, l).
class Tensor4 {
public:
    Tensor4() = default;
    Tensor4(int d0, int d1, int d2, int d3)
        : d0_(d0), d1_(d1), d2_(d2), d3_(d3),
          v_(static_cast<size_t>(d0) * d1 * d2 * d3, 0.0) {}

    double& operator()(int i, int j, int k, int l) { return v_[idx(i, j, k, l)]; }
    double operator()(int i, int j, int k, int l) const { return v_[idx(i, j, k, l)]; }

    int dim0() const { return d0_; }
    int dim1() const { return d1_; }
    int dim2() const { return d2_; }
    int dim3() const { return d3_; }
    void setZero() { std::fill(v_.begin(), v_.end(), 0.0); }

private:
    size_t idx(int i, int j, int k, int l) const {
        assert(i >= 0 && i < d0_ && j >= 0 && j < d1_ && k >= 0 && k < d2_ && l >= 0 && l < d3_);
        return ((static_cast<size_t>(i) * d1_ + j) * d2_ + k) * d3_ + l;
    }
    int d0_ = 0, d1_ = 0, d2_ = 0, d3_ = 0;
    std::vector<double> v_;
};

}  // namespace riccilab
