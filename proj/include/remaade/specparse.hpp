#pragma once

#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "remaade/envs.hpp"
#include "remaade/external_env.hpp"
#include "remaade/search_space.hpp"

namespace remaade {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& tok : split(s, ',')) {
    try {
      std::size_t pos = 0;
      int v = std::stoi(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse " + what + " entry '" + tok + "'");
    }
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& tok : split(s, ',')) {
    try {
      std::size_t pos = 0;
      double v = std::stod(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse " + what + " entry '" + tok + "'");
    }
  }
  return out;
}

// --space accepts `nas101-cell` or `dims=D0,D1,...`; families and validity
// come from their own keys.
inline SearchSpace parse_space(const std::string& space_spec, const std::string& families_spec,
                               const std::string& validity_spec) {
  if (space_spec == "nas101-cell") {
    if (!families_spec.empty() || (!validity_spec.empty() && validity_spec != "nas-cell"))
      throw std::invalid_argument("space nas101-cell fixes families and validity");
    return nas101_cell_space();
  }
  std::string dims_str = space_spec;
  if (dims_str.rfind("dims=", 0) == 0) dims_str = dims_str.substr(5);
  if (dims_str.empty()) throw std::invalid_argument("empty space specification");
  std::vector<int> dims = parse_int_list(dims_str, "dims");
  Validity validity = Validity::kAlwaysTrue;
  if (validity_spec == "nas-cell")
    validity = Validity::kNasCell;
  else if (!validity_spec.empty() && validity_spec != "none")
    throw std::invalid_argument("unknown validity '" + validity_spec + "'");
  if (!families_spec.empty())
    return build_space(std::move(dims), parse_int_list(families_spec, "families"), validity);
  return build_space(std::move(dims), validity);
}

// --env forms:
//   separable:w=1,1;t=0,0[;noise=SD][;seed=S]
//   xor:pairs=0-1,2-3[;bonus=B]
//   tabular:PATH
//   external:COMMAND
inline std::shared_ptr<Environment> parse_env(const std::string& env_spec,
                                              const SearchSpace& space, bool minimize,
                                              int external_timeout_ms = 30000) {
  auto colon = env_spec.find(':');
  const std::string kind = env_spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : env_spec.substr(colon + 1);
  if (minimize && kind != "tabular")
    throw std::invalid_argument("--minimize applies to tabular environments only");
  if (kind == "separable") {
    std::vector<double> w;
    std::vector<int> t;
    double noise = 0.0;
    std::uint64_t seed = 0;
    for (const auto& kv : split(rest, ';')) {
      if (kv.empty()) continue;
      auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("separable env: expected key=value, got '" + kv + "'");
      const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      if (key == "w") w = parse_double_list(val, "weights");
      else if (key == "t") t = parse_int_list(val, "targets");
      else if (key == "noise") noise = std::stod(val);
      else if (key == "seed") seed = std::stoull(val);
      else throw std::invalid_argument("separable env: unknown key '" + key + "'");
    }
    if (w.empty() && t.empty()) {
      // default: all-ones weights toward the all-zero string
      w.assign(static_cast<std::size_t>(space.n()), 1.0);
      t.assign(static_cast<std::size_t>(space.n()), 0);
    }
    return std::make_shared<SeparableEnv>(space, std::move(w), std::move(t), noise, seed);
  }
  if (kind == "xor") {
    std::vector<std::pair<int, int>> pairs;
    double bonus = 1.0;
    for (const auto& kv : split(rest, ';')) {
      if (kv.empty()) continue;
      auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("xor env: expected key=value, got '" + kv + "'");
      const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      if (key == "pairs") {
        for (const auto& pr : split(val, ',')) {
          auto dash = pr.find('-');
          if (dash == std::string::npos)
            throw std::invalid_argument("xor env: pair must look like 0-1, got '" + pr + "'");
          pairs.emplace_back(std::stoi(pr.substr(0, dash)), std::stoi(pr.substr(dash + 1)));
        }
      } else if (key == "bonus") {
        bonus = std::stod(val);
      } else {
        throw std::invalid_argument("xor env: unknown key '" + key + "'");
      }
    }
    if (pairs.empty()) throw std::invalid_argument("xor env: pairs= is required");
    return std::make_shared<XorEnv>(space, std::move(pairs), bonus);
  }
  if (kind == "tabular") {
    if (rest.empty()) throw std::invalid_argument("tabular env: path required");
    return load_tabular(rest, space, minimize);
  }
  if (kind == "external") {
    if (rest.empty()) throw std::invalid_argument("external env: command required");
    return spawn_external(rest, space, external_timeout_ms);
  }
  throw std::invalid_argument("unknown environment kind '" + kind + "'");
}

}  // namespace remaade
