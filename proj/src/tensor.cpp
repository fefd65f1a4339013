#include "edit_suggest/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace edit_suggest {

std::size_t shape_product(std::span<const std::size_t> shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape))
    , data_(std::move(data))
{
    if (shape_product(shape_) != data_.size()) {
        throw ShapeError("tensor shape " + shape_string() + " does not match " +
                         std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape)
{
    return filled(std::move(shape), 0.0);
}

Tensor Tensor::filled(std::vector<std::size_t> shape, double value)
{
    const auto n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value)
{
    return Tensor({1, 1}, {value});
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
{
    return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::row(std::span<const double> values)
{
    return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows)
{
    if (rows.empty()) {
        throw ShapeError("from_rows: no rows");
    }
    const auto cols = rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * cols);
    for (const auto& r : rows) {
        if (r.size() != cols) {
            throw ShapeError("from_rows: ragged rows");
        }
        data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor({rows.size(), cols}, std::move(data));
}

std::size_t Tensor::rows() const
{
    if (shape_.size() != 2) {
        throw ShapeError("expected a rank-2 tensor, got " + shape_string());
    }
    return shape_[0];
}

std::size_t Tensor::cols() const
{
    if (shape_.size() != 2) {
        throw ShapeError("expected a rank-2 tensor, got " + shape_string());
    }
    return shape_[1];
}

double Tensor::item() const
{
    if (data_.size() != 1) {
        throw ShapeError("item() on tensor of shape " + shape_string());
    }
    return data_[0];
}

std::vector<double> Tensor::row_values(std::size_t r) const
{
    const auto c = cols();
    return {data_.begin() + static_cast<std::ptrdiff_t>(r * c),
            data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * c)};
}

bool Tensor::all_finite() const
{
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

std::string Tensor::shape_string() const
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        os << (i ? "," : "") << shape_[i];
    }
    os << ']';
    return os.str();
}

bool operator==(const Tensor& a, const Tensor& b)
{
    if (!a.same_shape(b)) {
        return false;
    }
    const auto da = a.data();
    const auto db = b.data();
    return std::equal(da.begin(), da.end(), db.begin());
}

}  // namespace edit_suggest
