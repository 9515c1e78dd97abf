#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace remaade {

// One complete assignment of values to all hyperparameters, 0-based indices.
using ActionString = std::vector<int>;

enum class Validity { kAlwaysTrue, kNasCell, kUserSupplied };

// Immutable descriptor of a categorical search space: per-hyperparameter
// cardinalities, family ids (hyperparameters in one family share a value
// embedding table and must have equal cardinality), and a validity predicate.
class SearchSpace {
 public:
  SearchSpace(std::vector<int> dims, std::vector<int> families,
              Validity validity = Validity::kAlwaysTrue,
              std::function<bool(const ActionString&)> user_pred = nullptr)
      : dims_(std::move(dims)),
        families_(std::move(families)),
        validity_(validity),
        user_pred_(std::move(user_pred)) {
    if (dims_.empty()) throw std::invalid_argument("SearchSpace: dims must be non-empty");
    if (families_.size() != dims_.size())
      throw std::invalid_argument("SearchSpace: families length must match dims");
    for (int d : dims_)
      if (d < 2) throw std::invalid_argument("SearchSpace: every cardinality must be >= 2");
    int max_fam = -1;
    for (int f : families_) {
      if (f < 0) throw std::invalid_argument("SearchSpace: family ids must be non-negative");
      max_fam = std::max(max_fam, f);
    }
    family_dims_.assign(static_cast<std::size_t>(max_fam) + 1, -1);
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      int f = families_[i];
      if (family_dims_[static_cast<std::size_t>(f)] < 0) {
        family_dims_[static_cast<std::size_t>(f)] = dims_[i];
      } else if (family_dims_[static_cast<std::size_t>(f)] != dims_[i]) {
        throw std::invalid_argument("SearchSpace: family " + std::to_string(f) +
                                    " has members with unequal cardinality");
      }
    }
    for (int fd : family_dims_)
      if (fd < 0) throw std::invalid_argument("SearchSpace: family ids must be contiguous");
    if (validity_ == Validity::kUserSupplied && !user_pred_)
      throw std::invalid_argument("SearchSpace: user-supplied validity requires a predicate");
  }

  int n() const { return static_cast<int>(dims_.size()); }
  int dim(int i) const { return dims_.at(static_cast<std::size_t>(i)); }
  int family(int i) const { return families_.at(static_cast<std::size_t>(i)); }
  int num_families() const { return static_cast<int>(family_dims_.size()); }
  int family_dim(int f) const { return family_dims_.at(static_cast<std::size_t>(f)); }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<int>& families() const { return families_; }
  Validity validity() const { return validity_; }

  void check_shape(const ActionString& s) const {
    if (static_cast<int>(s.size()) != n())
      throw std::invalid_argument("ActionString: length " + std::to_string(s.size()) +
                                  " does not match space dimensionality " + std::to_string(n()));
    for (int i = 0; i < n(); ++i)
      if (s[static_cast<std::size_t>(i)] < 0 || s[static_cast<std::size_t>(i)] >= dim(i))
        throw std::invalid_argument("ActionString: index out of range at position " +
                                    std::to_string(i));
  }

  // Product of cardinalities, saturating at 2^63-1.
  std::uint64_t num_strings() const {
    std::uint64_t p = 1;
    for (int d : dims_) {
      if (p > (UINT64_MAX >> 21)) return UINT64_MAX;
      p *= static_cast<std::uint64_t>(d);
    }
    return p;
  }

 private:
  std::vector<int> dims_;
  std::vector<int> families_;
  std::vector<int> family_dims_;
  Validity validity_;
  std::function<bool(const ActionString&)> user_pred_;

  friend bool is_valid(const SearchSpace&, const ActionString&);
};

// --- NASBench-101-style cell encoding -------------------------------------
//
// 7-node cell, node 0 = input, node 6 = output. Positions 0..4 pick the
// operation of nodes 1..5 (family A, D=3: conv1x1, conv3x3, maxpool3x3).
// Positions 5..25 are the 21 strict-upper-triangle edge indicators of the
// 7x7 adjacency matrix in row-major order (family B, D=2). Encoding only the
// upper triangle makes every string a DAG by construction.

namespace nas_cell {

inline constexpr int kNodes = 7;
inline constexpr int kOpNodes = 5;
inline constexpr int kEdges = 21;
inline constexpr int kMaxActiveEdges = 9;
inline constexpr int kDims = kOpNodes + kEdges;  // 26

// Position of edge (i -> j), 0 <= i < j < 7, within the edge block.
inline int edge_index(int i, int j) {
  if (i < 0 || j <= i || j >= kNodes)
    throw std::invalid_argument("nas_cell::edge_index: need 0 <= i < j < 7");
  // row-major over the strict upper triangle
  int idx = 0;
  for (int r = 0; r < i; ++r) idx += kNodes - 1 - r;
  return idx + (j - i - 1);
}

inline bool edge_active(const ActionString& s, int i, int j) {
  return s[static_cast<std::size_t>(kOpNodes + edge_index(i, j))] != 0;
}

// Validity is decided solely by the edge bits: at most 9 active edges, and a
// directed path from node 0 to node 6 over active edges.
inline bool valid(const ActionString& s) {
  int active = 0;
  for (int e = 0; e < kEdges; ++e) active += s[static_cast<std::size_t>(kOpNodes + e)] != 0;
  if (active > kMaxActiveEdges) return false;
  bool reach[kNodes] = {true, false, false, false, false, false, false};
  for (int i = 0; i < kNodes; ++i) {
    if (!reach[i]) continue;
    for (int j = i + 1; j < kNodes; ++j)
      if (edge_active(s, i, j)) reach[j] = true;
  }
  return reach[kNodes - 1];
}

}  // namespace nas_cell

inline SearchSpace nas101_cell_space() {
  std::vector<int> dims(nas_cell::kDims, 2);
  std::vector<int> fams(nas_cell::kDims, 1);
  for (int i = 0; i < nas_cell::kOpNodes; ++i) {
    dims[static_cast<std::size_t>(i)] = 3;
    fams[static_cast<std::size_t>(i)] = 0;
  }
  return SearchSpace(std::move(dims), std::move(fams), Validity::kNasCell);
}

inline SearchSpace build_space(std::vector<int> dims, std::vector<int> families,
                               Validity validity = Validity::kAlwaysTrue,
                               std::function<bool(const ActionString&)> user_pred = nullptr) {
  return SearchSpace(std::move(dims), std::move(families), validity, std::move(user_pred));
}

// Convenience: one family per distinct cardinality (hyperparameters with the
// same D share a value-embedding table).
inline SearchSpace build_space(std::vector<int> dims,
                               Validity validity = Validity::kAlwaysTrue) {
  std::vector<int> fams(dims.size(), 0);
  std::vector<int> seen;  // cardinality of family k
  for (std::size_t i = 0; i < dims.size(); ++i) {
    int f = -1;
    for (std::size_t k = 0; k < seen.size(); ++k)
      if (seen[k] == dims[i]) f = static_cast<int>(k);
    if (f < 0) {
      f = static_cast<int>(seen.size());
      seen.push_back(dims[i]);
    }
    fams[i] = f;
  }
  return SearchSpace(std::move(dims), std::move(fams), validity);
}

inline bool is_valid(const SearchSpace& space, const ActionString& s) {
  space.check_shape(s);
  switch (space.validity()) {
    case Validity::kAlwaysTrue:
      return true;
    case Validity::kNasCell:
      if (space.n() != nas_cell::kDims)
        throw std::invalid_argument("is_valid: nas-cell validity requires a 26-dim space");
      return nas_cell::valid(s);
    case Validity::kUserSupplied:
      return space.user_pred_(s);
  }
  return true;
}

inline constexpr std::uint64_t kEnumerationGuard = std::uint64_t{1} << 20;

// Visits every string in lexicographic order (last position fastest), skipping
// invalid ones unless include_invalid is set. Guarded to small spaces.
template <typename Fn>
void for_each_string(const SearchSpace& space, bool include_invalid, Fn&& fn) {
  const std::uint64_t total = space.num_strings();
  if (total > kEnumerationGuard)
    throw std::runtime_error("enumerate_strings: space has " + std::to_string(total) +
                             " raw strings, exceeding the guard of " +
                             std::to_string(kEnumerationGuard));
  ActionString s(static_cast<std::size_t>(space.n()), 0);
  const int n = space.n();
  while (true) {
    if (include_invalid || is_valid(space, s)) fn(static_cast<const ActionString&>(s));
    int pos = n - 1;
    while (pos >= 0) {
      if (++s[static_cast<std::size_t>(pos)] < space.dim(pos)) break;
      s[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) return;
  }
}

inline std::vector<ActionString> enumerate_strings(const SearchSpace& space,
                                                   bool include_invalid = false) {
  std::vector<ActionString> out;
  for_each_string(space, include_invalid, [&](const ActionString& s) { out.push_back(s); });
  return out;
}

}  // namespace remaade
