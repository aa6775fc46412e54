#include "ffr/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ffr {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw std::invalid_argument("tensor: shape " + shape_str() + " does not match data length " +
                                    std::to_string(data_.size()));
    }
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw std::logic_error("tensor: rows() on rank-" + std::to_string(rank()) + " tensor");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw std::logic_error("tensor: cols() on rank-" + std::to_string(rank()) + " tensor");
    return shape_[1];
}

double Tensor::item() const {
    if (data_.size() != 1) throw std::logic_error("tensor: item() on tensor of size " + std::to_string(size()));
    return data_[0];
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ',';
        os << shape_[i];
    }
    os << ']';
    return os.str();
}

} // namespace ffr
