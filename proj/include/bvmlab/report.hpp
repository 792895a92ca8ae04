#pragma once

// JSON renderings of the experiment reports and atomic file output.

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <unistd.h>

#include "bvmlab/distance.hpp"
#include "bvmlab/error.hpp"
#include "bvmlab/lecam.hpp"
#include "bvmlab/multinomial.hpp"
#include "bvmlab/neyman.hpp"
#include "bvmlab/rng.hpp"

namespace bvmlab {

using Json = nlohmann::ordered_json;

inline Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json to_json(const ConvergenceReport& rep) {
  Json j;
  j["family"] = rep.family;
  j["prior"] = rep.prior;
  j["regime"] = to_string(rep.regime);
  j["frequency"] = rep.frequency;
  j["metric"] = to_string(rep.metric);
  j["convention"] = to_string(rep.convention);
  j["seed"] = rep.seed ? Json(*rep.seed) : Json(nullptr);
  j["generator"] = rep.generator;
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    Json row;
    row["n"] = r.n;
    row["s"] = r.s;
    row["realized_freq"] = r.realized_freq;
    row["distance"] = optional_json(r.distance);
    row["error_budget"] = r.error_budget;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  j["fitted_rate"] = optional_json(rep.fitted_rate);
  j["strictly_decreasing"] = rep.strictly_decreasing;
  j["rate_in_band"] = rep.rate_in_band;
  return j;
}

struct MultinomialReport {
  std::vector<std::int64_t> counts;
  std::string prior;
  Eigen::MatrixXd h;
  Eigen::MatrixXd target_covariance;
  Eigen::MatrixXd z_covariance;
  Eigen::VectorXd z_mean;
  MonteCarloEstimate tv;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
};

inline Json to_json(const MultinomialReport& r) {
  Json j;
  j["counts"] = r.counts;
  j["prior"] = r.prior;
  j["H"] = matrix_json(r.h);
  j["target_covariance"] = matrix_json(r.target_covariance);
  j["z_covariance"] = matrix_json(r.z_covariance);
  j["z_mean"] = std::vector<double>(r.z_mean.data(), r.z_mean.data() + r.z_mean.size());
  j["tv"] = r.tv.estimate;
  j["tv_stderr"] = r.tv.std_error;
  j["seed"] = r.seed;
  j["samples"] = r.samples;
  j["batches"] = kBatches;
  j["generator"] = kGeneratorName;
  j["convention"] = "heat-kernel: density sqrt(det H) / pi^(r/2) exp(-z' H z), z = sqrt(n)(x - a)";
  return j;
}

inline Json to_json(const DualityRecord& r) {
  Json j;
  j["n"] = r.n;
  j["k"] = r.k;
  j["lambda0"] = r.lambda0;
  j["log_lambda0"] = r.log_lambda0;
  j["exact_P"] = optional_json(r.exact_p);
  j["chi2_P"] = r.chi2_p;
  j["posterior_P"] = r.posterior_p;
  j["posterior_se"] = r.posterior_se;
  j["gap"] = r.gap;
  j["seed"] = r.seed;
  j["samples"] = r.samples;
  j["generator"] = kGeneratorName;
  return j;
}

inline Json to_json(const RiskReport& r, const std::optional<EpsilonGap>& gap = std::nullopt) {
  Json j;
  j["k"] = r.k;
  j["prior"] = r.prior;
  j["gain"] = r.gain;
  Json entries = Json::array();
  for (const auto& e : r.entries) entries.push_back({{"estimator", e.estimator}, {"J", e.j}});
  j["estimators"] = std::move(entries);
  j["best"] = r.entries[r.best].estimator;
  if (gap) {
    j["epsilon_gap"] = {{"gap", gap->gap}, {"candidate_J", gap->candidate_j}, {"best_J", gap->best_j}, {"best", gap->best}};
  }
  return j;
}

inline Json to_json(const TvSummary& s) { return {{"median", s.median}, {"p90", s.p90}, {"frac_below", s.frac_below}}; }

inline Json to_json(const LeCamReport& r) {
  Json j;
  j["theta0"] = r.theta0;
  j["prior"] = r.prior;
  j["k_grid"] = r.k_grid;
  j["runs"] = r.runs;
  j["seed"] = r.seed;
  j["generator"] = r.generator;
  j["threshold"] = r.threshold;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json o;
    o["k"] = row.k;
    o["oracle_gamma"] = to_json(row.oracle);
    o["plugin_gamma"] = to_json(row.plugin);
    o["boundary_exclusions"] = row.boundary_exclusions;
    o["scale_ratio_median"] = row.scale_ratio_median;
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  return j;
}

/// Writes content to path through a sibling temporary file and a rename, so
/// a failed run never leaves a partial report behind.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::invalid_argument, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorCode::invalid_argument, "failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::invalid_argument, "cannot move report into " + path.string());
  }
}

}  // namespace bvmlab
