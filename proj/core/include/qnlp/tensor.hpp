#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace qnlp {

/// Dense row-major double tensor. Plain value type; gradient bookkeeping
/// lives on the Tape, not here.
class Tensor {
  public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor scalar(double value);
    static Tensor vector(std::vector<double> data);
    /// rows x cols from row-major data.
    static Tensor matrix(std::size_t rows, std::size_t cols,
                         std::vector<double> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

    bool is_scalar() const { return data_.size() == 1; }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// 2-d element access; no bounds check beyond debug builds.
    double& at(std::size_t row, std::size_t col) {
        return data_[row * shape_[1] + col];
    }
    double at(std::size_t row, std::size_t col) const {
        return data_[row * shape_[1] + col];
    }

    void fill(double value);
    bool all_finite() const;

    std::string shape_str() const;

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// "[2, 3]"-style rendering, used in error messages.
std::string shape_to_string(const std::vector<std::size_t>& shape);

std::size_t shape_numel(const std::vector<std::size_t>& shape);

}  // namespace qnlp
