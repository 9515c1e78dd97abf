#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "remaade/rng.hpp"
#include "remaade/search_space.hpp"

namespace remaade {

// Black-box objective f: ActionString -> reward. The engine maximizes reward.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual double evaluate(const ActionString& s) = 0;
  virtual int n() const = 0;
  virtual bool deterministic() const = 0;
  virtual bool concurrent_safe() const = 0;
  virtual std::string kind() const = 0;
};

// f(a) = sum_i w_i * 1[a_i = t_i] + Gaussian(0, noise_sd). Optimum is the
// target string with value sum_i w_i.
class SeparableEnv : public Environment {
 public:
  SeparableEnv(SearchSpace space, std::vector<double> weights, std::vector<int> targets,
               double noise_sd, std::uint64_t noise_seed = 0)
      : space_(std::move(space)),
        weights_(std::move(weights)),
        targets_(std::move(targets)),
        noise_sd_(noise_sd),
        rng_(noise_seed) {
    if (static_cast<int>(weights_.size()) != space_.n() ||
        static_cast<int>(targets_.size()) != space_.n())
      throw std::invalid_argument("SeparableEnv: weights/targets length must match N");
    for (double w : weights_)
      if (w < 0.0) throw std::invalid_argument("SeparableEnv: weights must be >= 0");
    space_.check_shape(targets_);
  }

  double evaluate(const ActionString& s) override {
    space_.check_shape(s);
    double f = 0.0;
    for (int i = 0; i < space_.n(); ++i)
      if (s[static_cast<std::size_t>(i)] == targets_[static_cast<std::size_t>(i)])
        f += weights_[static_cast<std::size_t>(i)];
    if (noise_sd_ > 0.0) {
      std::lock_guard<std::mutex> lock(mu_);
      f += noise_sd_ * rng_.normal();
    }
    return f;
  }

  int n() const override { return space_.n(); }
  bool deterministic() const override { return noise_sd_ == 0.0; }
  bool concurrent_safe() const override { return true; }
  std::string kind() const override { return "separable"; }

 private:
  SearchSpace space_;
  std::vector<double> weights_;
  std::vector<int> targets_;
  double noise_sd_;
  std::mutex mu_;
  Rng rng_;
};

// f(a) = sum over pairs (p, q) of bonus * 1[a_p xor a_q = 1]. Requires all
// binary dims and disjoint pairs. Coordinate marginals are uninformative under
// uniform sampling, which is what separates dependency-aware policies from
// independent ones.
class XorEnv : public Environment {
 public:
  XorEnv(SearchSpace space, std::vector<std::pair<int, int>> pairs, double bonus)
      : space_(std::move(space)), pairs_(std::move(pairs)), bonus_(bonus) {
    for (int i = 0; i < space_.n(); ++i)
      if (space_.dim(i) != 2) throw std::invalid_argument("XorEnv: all cardinalities must be 2");
    std::vector<char> used(static_cast<std::size_t>(space_.n()), 0);
    for (auto [p, q] : pairs_) {
      if (p < 0 || q < 0 || p >= space_.n() || q >= space_.n() || p == q)
        throw std::invalid_argument("XorEnv: pair index out of range");
      if (used[static_cast<std::size_t>(p)] || used[static_cast<std::size_t>(q)])
        throw std::invalid_argument("XorEnv: pairs must be disjoint");
      used[static_cast<std::size_t>(p)] = used[static_cast<std::size_t>(q)] = 1;
    }
  }

  double evaluate(const ActionString& s) override {
    space_.check_shape(s);
    double f = 0.0;
    for (auto [p, q] : pairs_)
      if ((s[static_cast<std::size_t>(p)] ^ s[static_cast<std::size_t>(q)]) == 1) f += bonus_;
    return f;
  }

  int n() const override { return space_.n(); }
  bool deterministic() const override { return true; }
  bool concurrent_safe() const override { return true; }
  std::string kind() const override { return "xor"; }

 private:
  SearchSpace space_;
  std::vector<std::pair<int, int>> pairs_;
  double bonus_;
};

struct TabularRecord {
  ActionString values;
  double reward = 0.0;
  std::optional<double> metric2;
};

// Exact-lookup environment backed by a CSV table. Strings absent from the
// table raise on evaluation.
class TabularEnv : public Environment {
 public:
  TabularEnv(SearchSpace space, std::vector<TabularRecord> records, bool negate = false)
      : space_(std::move(space)) {
    for (auto& r : records) {
      space_.check_shape(r.values);
      if (!std::isfinite(r.reward))
        throw std::invalid_argument("TabularEnv: non-finite reward");
      if (negate) r.reward = -r.reward;
      auto [it, inserted] = table_.emplace(r.values, r);
      (void)it;
      if (!inserted) throw std::invalid_argument("TabularEnv: duplicate string");
    }
  }

  double evaluate(const ActionString& s) override {
    space_.check_shape(s);
    auto it = table_.find(s);
    if (it == table_.end()) {
      std::string key;
      for (int v : s) key += std::to_string(v) + ",";
      throw std::runtime_error("TabularEnv: string " + key + " not present in the table");
    }
    return it->second.reward;
  }

  const std::map<ActionString, TabularRecord>& table() const { return table_; }

  int n() const override { return space_.n(); }
  bool deterministic() const override { return true; }
  bool concurrent_safe() const override { return true; }
  std::string kind() const override { return "tabular"; }

 private:
  SearchSpace space_;
  std::map<ActionString, TabularRecord> table_;
};

// Caches rewards of a deterministic inner env; second evaluation of the same
// string never reaches the inner env.
class MemoizedEnv : public Environment {
 public:
  explicit MemoizedEnv(std::shared_ptr<Environment> inner) : inner_(std::move(inner)) {
    if (!inner_->deterministic())
      throw std::invalid_argument("MemoizedEnv: inner environment must be deterministic");
  }

  double evaluate(const ActionString& s) override {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(s);
    if (it != cache_.end()) return it->second;
    ++underlying_calls_;
    double r = inner_->evaluate(s);
    cache_.emplace(s, r);
    return r;
  }

  long underlying_calls() const { return underlying_calls_; }

  int n() const override { return inner_->n(); }
  bool deterministic() const override { return true; }
  bool concurrent_safe() const override { return true; }
  std::string kind() const override { return "memoized(" + inner_->kind() + ")"; }

 private:
  std::shared_ptr<Environment> inner_;
  std::map<ActionString, double> cache_;
  std::mutex mu_;
  long underlying_calls_ = 0;
};

// --- Tabular file format ----------------------------------------------------
// Plain text CSV, header `a_0,...,a_{N-1},reward[,metric2]`, 0-based indices,
// one record per line, '\n' terminators, canonical lexicographic row order on
// write.

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::shared_ptr<TabularEnv> load_tabular(const std::string& path, const SearchSpace& space,
                                                bool negate = false) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_tabular: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_tabular: empty file " + path);
  auto header = split_csv_line(line);
  const int n = space.n();
  const bool has_metric2 = static_cast<int>(header.size()) == n + 2;
  if (static_cast<int>(header.size()) != n + 1 && !has_metric2)
    throw std::runtime_error("load_tabular: header of " + path + " has " +
                             std::to_string(header.size()) + " columns, expected " +
                             std::to_string(n + 1) + " or " + std::to_string(n + 2));
  for (int i = 0; i < n; ++i)
    if (header[static_cast<std::size_t>(i)] != "a_" + std::to_string(i))
      throw std::runtime_error("load_tabular: header column " + std::to_string(i) +
                               " must be a_" + std::to_string(i));
  if (header[static_cast<std::size_t>(n)] != "reward")
    throw std::runtime_error("load_tabular: missing reward column");
  std::vector<TabularRecord> records;
  std::vector<int> record_lines;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split_csv_line(line);
    if (cols.size() != header.size())
      throw std::runtime_error("load_tabular: line " + std::to_string(lineno) + " has " +
                               std::to_string(cols.size()) + " columns, expected " +
                               std::to_string(header.size()));
    TabularRecord rec;
    try {
      for (int i = 0; i < n; ++i)
        rec.values.push_back(std::stoi(cols[static_cast<std::size_t>(i)]));
      rec.reward = std::stod(cols[static_cast<std::size_t>(n)]);
      if (has_metric2) rec.metric2 = std::stod(cols[static_cast<std::size_t>(n) + 1]);
    } catch (const std::exception&) {
      throw std::runtime_error("load_tabular: parse error at line " + std::to_string(lineno));
    }
    try {
      space.check_shape(rec.values);
    } catch (const std::exception& e) {
      throw std::runtime_error("load_tabular: line " + std::to_string(lineno) + ": " + e.what());
    }
    records.push_back(std::move(rec));
    record_lines.push_back(lineno);
  }
  std::map<ActionString, int> first_line;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = first_line.emplace(records[i].values, record_lines[i]);
    if (!inserted)
      throw std::runtime_error("load_tabular: line " + std::to_string(record_lines[i]) +
                               " duplicates line " + std::to_string(it->second));
  }
  return std::make_shared<TabularEnv>(space, std::move(records), negate);
}

inline void dump_tabular(const TabularEnv& env, const SearchSpace& space,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_tabular: cannot open " + path);
  bool any_metric2 = false;
  for (const auto& [k, r] : env.table()) any_metric2 |= r.metric2.has_value();
  for (int i = 0; i < space.n(); ++i) out << "a_" << i << ',';
  out << "reward";
  if (any_metric2) out << ",metric2";
  out << '\n';
  char buf[64];
  for (const auto& [k, r] : env.table()) {  // std::map iterates in lexicographic order
    for (int v : k) out << v << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.reward);
    out << buf;
    if (any_metric2) {
      std::snprintf(buf, sizeof buf, "%.17g", r.metric2.value_or(0.0));
      out << ',' << buf;
    }
    out << '\n';
  }
}

// Builds a tabular env from any deterministic function on an enumerable space.
inline std::shared_ptr<TabularEnv> tabulate(const SearchSpace& space,
                                            const std::function<double(const ActionString&)>& f,
                                            bool include_invalid = true) {
  std::vector<TabularRecord> records;
  for_each_string(space, include_invalid,
                  [&](const ActionString& s) { records.push_back({s, f(s), std::nullopt}); });
  return std::make_shared<TabularEnv>(space, std::move(records));
}

}  // namespace remaade
