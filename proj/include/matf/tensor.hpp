#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "matf/errors.hpp"

namespace matf {

// Dense row-major tensor of doubles. Feature maps use HWC layout so the
// channel column at one cell is contiguous.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(numel_of(shape_), 0.0);
    }
    Tensor(std::vector<int> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != numel_of(shape_)) throw ShapeError("tensor data/shape mismatch");
    }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape_.size()); }

    // 2-D indexing (row-major)
    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * dim(1) + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * dim(1) + c]; }
    // 3-D indexing (HWC)
    double& at(int r, int c, int ch) {
        return data_[(static_cast<std::size_t>(r) * dim(1) + c) * dim(2) + ch];
    }
    double at(int r, int c, int ch) const {
        return data_[(static_cast<std::size_t>(r) * dim(1) + c) * dim(2) + ch];
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    static std::size_t numel_of(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) {
            if (d < 0) throw ShapeError("negative dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

}  // namespace matf
