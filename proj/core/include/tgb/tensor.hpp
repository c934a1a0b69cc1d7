// Copyright 2026 The TGB Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TGB_TENSOR_HPP_
#define TGB_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace tgb {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

// Dense row-major array. Scalar is float for training and inference; double
// instantiations exist for gradient verification.
template <typename Scalar>
class Tensor {
 public:
  using value_type = Scalar;

  Tensor() = default;
  explicit Tensor(Shape shape, Scalar fill = Scalar(0));
  Tensor(Shape shape, std::vector<Scalar> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor matrix(std::initializer_list<std::initializer_list<Scalar>> rows);
  static Tensor vector(std::initializer_list<Scalar> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // 2-D accessors. A rank-1 tensor is treated as a single row.
  std::size_t rows() const { return shape_.size() >= 2 ? shape_[0] : 1; }
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  Scalar& operator[](std::size_t i) { return data_[i]; }
  const Scalar& operator[](std::size_t i) const { return data_[i]; }
  Scalar& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const Scalar& at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::span<Scalar> values() { return data_; }
  std::span<const Scalar> values() const { return data_; }
  std::span<Scalar> row(std::size_t r) {
    return std::span<Scalar>(data_).subspan(r * cols(), cols());
  }
  std::span<const Scalar> row(std::size_t r) const {
    return std::span<const Scalar>(data_).subspan(r * cols(), cols());
  }

  void fill(Scalar v);
  Tensor reshaped(Shape shape) const;
  bool all_finite() const;

  template <typename Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return Tensor<Other>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<Scalar> data_;
};

// Named trainable tensors with gradients of identical shape. Insertion order
// is preserved; checkpoints and reports iterate in that order.
template <typename Scalar>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
  };

  // Throws ValidationError on a duplicate name.
  Tensor<Scalar>& add(const std::string& name, Tensor<Scalar> value);

  bool contains(const std::string& name) const {
    return index_.count(name) != 0;
  }
  std::size_t index_of(const std::string& name) const;
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  Entry& entry(const std::string& name) { return entries_[index_of(name)]; }
  const Entry& entry(const std::string& name) const {
    return entries_[index_of(name)];
  }
  Tensor<Scalar>& value(const std::string& name) { return entry(name).value; }
  const Tensor<Scalar>& value(const std::string& name) const {
    return entry(name).value;
  }
  Tensor<Scalar>& grad(const std::string& name) { return entry(name).grad; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t total_elements() const;

  void zero_grad();

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<Other>());
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace tgb

#endif  // TGB_TENSOR_HPP_
