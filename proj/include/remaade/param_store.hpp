#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace remaade {

// Named tensors backed by one flat array of doubles. Tensors are registered
// once, in a fixed order, and the store is then shape-frozen: the global
// flattening order never changes afterwards, which keeps gradient
// accumulation and finite-difference probing aligned.
class ParamStore {
 public:
  struct TensorInfo {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
  };

  ParamStore() = default;

  // Registers a tensor and returns its id. Ids are dense and stable.
  int add(std::string name, std::vector<int> shape) {
    if (frozen_) throw std::logic_error("ParamStore: add after freeze");
    std::size_t sz = 1;
    for (int d : shape) {
      if (d <= 0) throw std::invalid_argument("ParamStore: non-positive dim in " + name);
      sz *= static_cast<std::size_t>(d);
    }
    for (const auto& t : tensors_)
      if (t.name == name) throw std::invalid_argument("ParamStore: duplicate tensor " + name);
    TensorInfo info;
    info.name = std::move(name);
    info.shape = std::move(shape);
    info.offset = data_.size();
    info.size = sz;
    tensors_.push_back(std::move(info));
    data_.resize(data_.size() + sz, 0.0);
    return static_cast<int>(tensors_.size()) - 1;
  }

  void freeze() { frozen_ = true; }

  int count() const { return static_cast<int>(tensors_.size()); }
  std::size_t size() const { return data_.size(); }
  const TensorInfo& info(int id) const { return tensors_.at(static_cast<std::size_t>(id)); }

  int find(std::string_view name) const {
    for (int i = 0; i < count(); ++i)
      if (tensors_[static_cast<std::size_t>(i)].name == name) return i;
    return -1;
  }

  std::span<double> values(int id) {
    const auto& t = info(id);
    return {data_.data() + t.offset, t.size};
  }
  std::span<const double> values(int id) const {
    const auto& t = info(id);
    return {data_.data() + t.offset, t.size};
  }
  std::span<double> values(std::string_view name) {
    int id = find(name);
    if (id < 0) throw std::invalid_argument("ParamStore: no tensor named " + std::string(name));
    return values(id);
  }
  std::span<const double> values(std::string_view name) const {
    int id = find(name);
    if (id < 0) throw std::invalid_argument("ParamStore: no tensor named " + std::string(name));
    return values(id);
  }

  std::span<double> flat() { return {data_.data(), data_.size()}; }
  std::span<const double> flat() const { return {data_.data(), data_.size()}; }

  double& at(std::size_t i) { return data_.at(i); }
  double at(std::size_t i) const { return data_.at(i); }

  bool same_layout(const ParamStore& other) const {
    if (tensors_.size() != other.tensors_.size()) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      if (tensors_[i].name != other.tensors_[i].name) return false;
      if (tensors_[i].shape != other.tensors_[i].shape) return false;
    }
    return true;
  }

  // Returns a zeroed store with this store's layout.
  ParamStore zeros_like() const {
    ParamStore g;
    g.tensors_ = tensors_;
    g.data_.assign(data_.size(), 0.0);
    g.frozen_ = true;
    return g;
  }

  void fill(double v) {
    for (double& x : data_) x = v;
  }

  // this += scale * other (layouts must match)
  void add_scaled(const ParamStore& other, double scale) {
    if (other.size() != size()) throw std::invalid_argument("ParamStore: add_scaled size mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
  }

  void scale(double s) {
    for (double& x : data_) x *= s;
  }

  // Text checkpoint: one `tensor <name> <rank> <dims...>` line followed by the
  // row-major values, printed with round-trip-exact precision.
  void save_text(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("ParamStore: cannot open " + path + " for writing");
    char buf[64];
    for (const auto& t : tensors_) {
      out << "tensor " << t.name << ' ' << t.shape.size();
      for (int d : t.shape) out << ' ' << d;
      out << '\n';
      for (std::size_t i = 0; i < t.size; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", data_[t.offset + i]);
        out << buf << (i + 1 == t.size ? '\n' : ' ');
      }
    }
    if (!out) throw std::runtime_error("ParamStore: write failed for " + path);
  }

  // Loads values into an existing store; names and shapes must match exactly.
  void load_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ParamStore: cannot open " + path);
    for (auto& t : tensors_) {
      std::string tag, name;
      std::size_t rank = 0;
      if (!(in >> tag >> name >> rank) || tag != "tensor" || name != t.name)
        throw std::runtime_error("ParamStore: checkpoint mismatch at tensor " + t.name);
      if (rank != t.shape.size())
        throw std::runtime_error("ParamStore: rank mismatch for " + t.name);
      for (std::size_t r = 0; r < rank; ++r) {
        int d = 0;
        in >> d;
        if (d != t.shape[r]) throw std::runtime_error("ParamStore: shape mismatch for " + t.name);
      }
      for (std::size_t i = 0; i < t.size; ++i)
        if (!(in >> data_[t.offset + i]))
          throw std::runtime_error("ParamStore: truncated values for " + t.name);
    }
  }

 private:
  std::vector<TensorInfo> tensors_;
  std::vector<double> data_;
  bool frozen_ = false;
};

}  // namespace remaade
