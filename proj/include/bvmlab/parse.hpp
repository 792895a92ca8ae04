#pragma once

// Text keys for priors and models:
//   uniform | beta:2,5 | tnorm:0.5,0.2 | pwl:0:0,0.5:2,1:0 | dirichlet:1,1,1
//   binomial:n=100,s=37 | multinomial:counts=30,30,40
//   location:data=FILE,law=gaussian:1.0   (law also double-exponential:b)

#include <cerrno>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bvmlab/error.hpp"
#include "bvmlab/models.hpp"

namespace bvmlab {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace detail

inline double parse_double(std::string_view text) {
  const std::string s(detail::trim(text));
  require(!s.empty(), ErrorCode::parse, "empty number");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  require(end == s.c_str() + s.size() && errno == 0, ErrorCode::parse, "not a number: '" + s + "'");
  return v;
}

inline std::int64_t parse_int(std::string_view text) {
  const auto s = detail::trim(text);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc{} && ptr == s.data() + s.size() && !s.empty(), ErrorCode::parse,
          "not an integer: '" + std::string(s) + "'");
  return v;
}

inline std::vector<double> parse_double_list(std::string_view text, char sep = ',') {
  std::vector<double> out;
  for (const auto& tok : detail::split(text, sep)) out.push_back(parse_double(tok));
  return out;
}

inline std::vector<std::int64_t> parse_int_list(std::string_view text, char sep = ',') {
  std::vector<std::int64_t> out;
  for (const auto& tok : detail::split(text, sep)) out.push_back(parse_int(tok));
  return out;
}

namespace detail {

// "n=100,s=37" -> {n:100, s:37}; bare tokens continue the previous value so
// list values such as counts=30,30,40 survive the comma split.
inline std::map<std::string, std::string> parse_kv(std::string_view body) {
  std::map<std::string, std::string> out;
  std::string last;
  for (const auto& tok : split(body, ',')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      require(!last.empty(), ErrorCode::parse, "expected key=value, got '" + tok + "'");
      out[last] += "," + tok;
      continue;
    }
    last = std::string(trim(std::string_view(tok).substr(0, eq)));
    require(!last.empty(), ErrorCode::parse, "empty key in '" + tok + "'");
    require(!out.contains(last), ErrorCode::parse, "duplicate key '" + last + "'");
    out[last] = std::string(trim(std::string_view(tok).substr(eq + 1)));
  }
  return out;
}

inline std::pair<std::string, std::string> head_body(std::string_view text) {
  const auto t = trim(text);
  const auto colon = t.find(':');
  if (colon == std::string_view::npos) return {std::string(t), ""};
  return {std::string(trim(t.substr(0, colon))), std::string(trim(t.substr(colon + 1)))};
}

}  // namespace detail

inline ErrorLaw parse_error_law(std::string_view text) {
  const auto [head, body] = detail::head_body(text);
  const double scale = body.empty() ? 1.0 : parse_double(body);
  if (head == "gaussian" || head == "normal") return ErrorLaw::gaussian(scale);
  if (head == "double-exponential" || head == "laplace" || head == "dexp") return ErrorLaw::double_exponential(scale);
  fail(ErrorCode::parse, "unknown error law '" + head + "'");
}

/// Prior from its text key, bound to the given domain.
inline PriorSpec parse_prior(std::string_view text, const ParamDomain& domain) {
  const auto [head, body] = detail::head_body(text);
  if (head == "uniform") {
    require(body.empty(), ErrorCode::parse, "uniform takes no parameters");
    return PriorSpec(prior_kind::Uniform{}, domain);
  }
  if (head == "beta") {
    const auto v = parse_double_list(body);
    require(v.size() == 2, ErrorCode::parse, "beta needs two parameters");
    return PriorSpec(prior_kind::Beta{v[0], v[1]}, domain);
  }
  if (head == "tnorm") {
    const auto v = parse_double_list(body);
    require(v.size() == 2, ErrorCode::parse, "tnorm needs mu,sigma");
    return PriorSpec(prior_kind::TruncatedGaussian{v[0], v[1]}, domain);
  }
  if (head == "pwl") {
    prior_kind::PiecewiseLinear p;
    for (const auto& knot : detail::split(body, ',')) {
      const auto xy = detail::split(knot, ':');
      require(xy.size() == 2, ErrorCode::parse, "pwl knot must be theta:density, got '" + knot + "'");
      p.knots.emplace_back(parse_double(xy[0]), parse_double(xy[1]));
    }
    return PriorSpec(std::move(p), domain);
  }
  if (head == "dirichlet") {
    return PriorSpec(prior_kind::Dirichlet{parse_double_list(body)}, domain);
  }
  fail(ErrorCode::parse, "unknown prior '" + head + "'");
}

inline std::vector<double> read_observations(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::invalid_argument, "cannot open data file '" + path + "'");
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    }
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(parse_double(tok));
  }
  return out;
}

inline ObservationModel parse_model(std::string_view text) {
  const auto [head, body] = detail::head_body(text);
  const auto kv = detail::parse_kv(body);
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    require(it != kv.end(), ErrorCode::parse, head + " model needs '" + key + "='");
    return it->second;
  };
  auto only = [&](std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : kv) {
      bool known = false;
      for (const char* key : keys) known = known || k == key;
      require(known, ErrorCode::parse, "unknown key '" + k + "' for " + head + " model");
    }
  };
  if (head == "binomial") {
    only({"n", "s"});
    return Binomial(parse_int(get("n")), parse_int(get("s")));
  }
  if (head == "multinomial") {
    only({"counts"});
    return Multinomial(parse_int_list(get("counts")));
  }
  if (head == "location") {
    only({"data", "law"});
    const ErrorLaw law = kv.contains("law") ? parse_error_law(kv.at("law")) : ErrorLaw::gaussian(1.0);
    return Location(read_observations(get("data")), law);
  }
  fail(ErrorCode::parse, "unknown model '" + head + "'");
}

}  // namespace bvmlab
