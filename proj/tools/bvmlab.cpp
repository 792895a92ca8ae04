// bvmlab: batch front end for the posterior, convergence, multinomial,
// testing-duality, Bayes-risk and Le Cam experiments.
//
// Exit status: 0 success, 2 validation error, 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bvmlab/approx.hpp"
#include "bvmlab/distance.hpp"
#include "bvmlab/error.hpp"
#include "bvmlab/lecam.hpp"
#include "bvmlab/multinomial.hpp"
#include "bvmlab/neyman.hpp"
#include "bvmlab/parse.hpp"
#include "bvmlab/posterior.hpp"
#include "bvmlab/report.hpp"

using namespace bvmlab;

namespace {

const std::set<std::string> kCommands{"posterior", "converge", "multinomial", "neyman", "risk", "lecam"};
const std::set<std::string> kFlags{"exact"};

struct Common {
  std::string output;
  std::string format = "csv";
  std::string seed;

  std::optional<std::uint64_t> seed_value() const {
    if (seed.empty()) return std::nullopt;
    const auto t = std::string(detail::trim(seed));
    require(!t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; }),
            ErrorCode::parse, "seed must be a nonnegative integer, got '" + seed + "'");
    try {
      return std::stoull(t);
    } catch (const std::exception&) {
      fail(ErrorCode::parse, "seed out of range: '" + seed + "'");
    }
  }

  std::uint64_t required_seed(const char* why) const {
    const auto s = seed_value();
    require(s.has_value(), ErrorCode::invalid_argument, std::string("--seed is required: ") + why);
    return *s;
  }
};

/// A rectangular result rendered as CSV or as key=value lines.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string num(double v) { return std::isnan(v) ? "nan" : detail::fmt_num(v); }
std::string num(const std::optional<double>& v) { return v ? num(*v) : "nan"; }

std::string render(const Table& t, const std::string& format) {
  std::ostringstream out;
  if (format == "kv") {
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < t.header.size(); ++i) out << t.header[i] << '=' << row[i] << '\n';
    }
    return out.str();
  }
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  return out.str();
}

void emit(const Common& c, const std::string& text) {
  if (c.output.empty() || c.output == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    write_atomic(c.output, text);
  }
}

void emit(const Common& c, const Table& table, const Json& json) {
  require(c.format == "csv" || c.format == "json" || c.format == "kv", ErrorCode::parse,
          "format must be csv, json or kv");
  emit(c, c.format == "json" ? json.dump(2) + "\n" : render(table, c.format));
}

Convention parse_convention(const std::string& s) {
  if (s == "std-normal" || s == "std") return Convention::std_normal;
  if (s == "heat-kernel" || s == "heat") return Convention::heat_kernel;
  fail(ErrorCode::parse, "convention must be std-normal or heat-kernel");
}

Regime parse_regime(const std::string& s) {
  if (s == "fixed" || s == "fixed-frequency") return Regime::fixed_frequency;
  if (s == "sampled") return Regime::sampled;
  fail(ErrorCode::parse, "regime must be fixed or sampled");
}

// ---------------------------------------------------------------------------

struct PosteriorArgs {
  std::string model;
  std::string prior = "uniform";
  std::string interval;
  int grid = 0;
};

void run_posterior(const Common& c, const PosteriorArgs& a) {
  const auto model = parse_model(a.model);
  const auto prior = parse_prior(a.prior, domain_of(model));
  const auto post = posterior_build(model, prior);
  if (a.grid > 0) {
    require(a.grid >= 2, ErrorCode::invalid_argument, "grid needs at least two points");
    const auto& d = post.domain();
    const double lo = std::isfinite(d.lo()) ? d.lo() : post.bulk_center() - 12.0 * post.bulk_scale();
    const double hi = std::isfinite(d.hi()) ? d.hi() : post.bulk_center() + 12.0 * post.bulk_scale();
    std::vector<double> grid;
    for (int i = 0; i < a.grid; ++i) grid.push_back(lo + (hi - lo) * i / (a.grid - 1));
    Table t{{"theta", "density", "cdf"}, {}};
    Json j;
    j["model"] = a.model;
    j["prior"] = prior.describe();
    Json pts = Json::array();
    for (double x : grid) {
      t.rows.push_back({num(x), num(post.density(x)), num(post.cdf(x))});
      pts.push_back({{"theta", x}, {"density", post.density(x)}, {"cdf", post.cdf(x)}});
    }
    j["grid"] = std::move(pts);
    emit(c, t, j);
    return;
  }
  Table t{{"model", "prior", "log_norm_const", "normalization_error", "median", "lo", "hi", "probability"}, {}};
  std::vector<std::string> row{"\"" + a.model + "\"", prior.describe(), num(post.log_norm_const()),
                               num(post.normalization_error()), num(post.median())};
  Json j;
  j["model"] = a.model;
  j["prior"] = prior.describe();
  j["log_norm_const"] = post.log_norm_const();
  j["normalization_error"] = post.normalization_error();
  j["median"] = post.median();
  if (!a.interval.empty()) {
    const auto iv = parse_double_list(a.interval);
    require(iv.size() == 2, ErrorCode::parse, "interval takes two values lo,hi");
    const double p = post.interval_probability(iv[0], iv[1]);
    row.insert(row.end(), {num(iv[0]), num(iv[1]), num(p)});
    j["interval"] = {{"lo", iv[0]}, {"hi", iv[1]}, {"probability", p}};
  } else {
    row.insert(row.end(), {"nan", "nan", "nan"});
    j["interval"] = nullptr;
  }
  t.rows.push_back(std::move(row));
  emit(c, t, j);
}

struct ConvergeArgs {
  std::string model = "binomial";
  double freq = 0.5;
  std::string prior = "uniform";
  std::string n_grid = "100,1000,10000";
  std::string metric = "tv";
  std::string convention = "std-normal";
  std::string regime = "fixed";
};

void run_converge(const Common& c, const ConvergeArgs& a) {
  require(a.model == "binomial", ErrorCode::unsupported_family, "convergence tables support the binomial family only");
  ConvergenceSettings cfg;
  cfg.regime = parse_regime(a.regime);
  cfg.frequency = a.freq;
  cfg.metric = parse_metric(a.metric);
  cfg.convention = parse_convention(a.convention);
  cfg.seed = c.seed_value();
  if (cfg.regime == Regime::sampled) c.required_seed("the sampled regime draws Bernoulli data");
  const auto grid = parse_int_list(a.n_grid);
  const auto rep = convergence_table(parse_prior(a.prior, ParamDomain::unit_interval()), grid, cfg);
  if (c.format == "json") {
    emit(c, to_json(rep).dump(2) + "\n");
  } else if (c.format == "csv") {
    std::ostringstream out;
    write_csv(out, rep);
    emit(c, out.str());
  } else {
    Table t{{"n", "metric", "distance", "realized_freq"}, {}};
    for (const auto& r : rep.rows) t.rows.push_back({std::to_string(r.n), to_string(rep.metric), num(r.distance), num(r.realized_freq)});
    emit(c, t, to_json(rep));
  }
}

struct MultinomialArgs {
  std::string counts;
  std::string freq;
  std::int64_t n = 0;
  std::string prior = "uniform";
  std::size_t samples = kDefaultSamples;
};

void run_multinomial(const Common& c, const MultinomialArgs& a) {
  std::vector<std::int64_t> counts;
  if (!a.counts.empty()) {
    require(a.freq.empty(), ErrorCode::invalid_argument, "give either --counts or --freq with --n, not both");
    counts = parse_int_list(a.counts);
  } else {
    require(!a.freq.empty() && a.n > 0, ErrorCode::invalid_argument, "need --counts, or --freq together with --n");
    counts = apportion(parse_double_list(a.freq), a.n);
  }
  const std::uint64_t seed = c.required_seed("the total-variation estimate is Monte Carlo");
  const Multinomial data(counts);
  const auto prior = parse_prior(a.prior, ParamDomain::simplex(data.categories()));
  const auto mp = multinomial_posterior_build(data, prior, {a.samples, seed});
  const auto moments = rescaled_moments(mp, a.samples, seed + 1);
  const auto target = mp.limit();
  MultinomialReport r;
  r.counts = counts;
  r.prior = prior.describe();
  r.h = mp.info().h;
  r.target_covariance = target.covariance();
  r.z_covariance = moments.covariance;
  r.z_mean = moments.mean;
  r.tv = tv_distance_md(mp, target, a.samples, seed);
  r.seed = seed;
  r.samples = a.samples;
  const double cov_gap = (moments.covariance - r.target_covariance).cwiseAbs().maxCoeff() /
                         r.target_covariance.cwiseAbs().maxCoeff();
  Table t{{"n", "categories", "tv", "tv_se", "cov_rel_gap", "seed", "samples"}, {}};
  t.rows.push_back({std::to_string(data.n()), std::to_string(data.categories()), num(r.tv.estimate),
                    num(r.tv.std_error), num(cov_gap), std::to_string(seed), std::to_string(a.samples)});
  emit(c, t, to_json(r));
}

struct NeymanArgs {
  int k = 0;
  std::int64_t n = -1;
  std::string p;
  std::optional<double> lambda0;
  std::optional<double> chi0;
  bool exact = false;
  std::string counts;
  std::string prior = "uniform";
  std::size_t samples = kDefaultSamples;
};

void run_neyman(const Common& c, const NeymanArgs& a) {
  std::vector<std::int64_t> counts;
  if (!a.counts.empty()) counts = parse_int_list(a.counts);
  std::int64_t n = a.n;
  if (n < 0 && !counts.empty()) {
    n = 0;
    for (auto v : counts) n += v;
  }
  require(n >= 0, ErrorCode::invalid_argument, "need --n or --counts");
  std::vector<double> p;
  if (!a.p.empty()) {
    p = parse_double_list(a.p);
  } else {
    const int k = a.k > 0 ? a.k : static_cast<int>(counts.size());
    require(k >= 2, ErrorCode::invalid_argument, "need --k or --p");
    p.assign(static_cast<std::size_t>(k), 1.0 / k);
  }
  require(a.k == 0 || a.k == static_cast<int>(p.size()), ErrorCode::count_mismatch, "--k does not match --p");

  std::optional<TestSetup> setup;
  if (a.lambda0 && a.chi0) {
    setup = TestSetup::from_both(n, p, *a.lambda0, *a.chi0);
  } else if (a.lambda0) {
    setup = TestSetup::from_lambda0(n, p, *a.lambda0);
  } else if (a.chi0) {
    setup = TestSetup::from_chi0(n, p, *a.chi0);
  }

  DualityRecord r;
  if (a.exact) {
    require(setup.has_value(), ErrorCode::invalid_argument, "--exact needs --lambda0 or --chi0");
    r.n = n;
    r.k = setup->k();
    r.lambda0 = setup->lambda0();
    r.log_lambda0 = setup->log_lambda0();
    r.exact_p = exact_type1(*setup);
    r.chi2_p = chi2_approx_type1(*setup);
    r.posterior_p = std::numeric_limits<double>::quiet_NaN();
    r.posterior_se = std::numeric_limits<double>::quiet_NaN();
    r.gap = std::numeric_limits<double>::quiet_NaN();
  } else {
    require(!counts.empty(), ErrorCode::invalid_argument, "the posterior probability needs --counts (or use --exact)");
    const PosteriorTestOptions opts{a.samples, c.required_seed("the posterior probability is Monte Carlo")};
    const auto prior = parse_prior(a.prior, ParamDomain::simplex(static_cast<int>(p.size())));
    r = setup ? duality_at(*setup, counts, prior, opts) : duality_report(n, p, counts, prior, opts);
  }
  Table t{{"n", "k", "lambda0", "exact_P", "chi2_P", "posterior_P", "posterior_se", "gap"}, {}};
  t.rows.push_back({std::to_string(r.n), std::to_string(r.k), num(r.lambda0), num(r.exact_p), num(r.chi2_p),
                    num(r.posterior_p), num(r.posterior_se), num(r.gap)});
  Json j = to_json(r);
  if (a.exact) {
    j["posterior_P"] = nullptr;
    j["posterior_se"] = nullptr;
    j["gap"] = nullptr;
    j.erase("seed");
    j.erase("samples");
  }
  emit(c, t, j);
}

struct RiskArgs {
  std::int64_t k = 10;
  std::string prior = "uniform";
  std::string gain = "quadratic";
  std::string estimators;
};

void run_risk(const Common& c, const RiskArgs& a) {
  const auto prior = parse_prior(a.prior, ParamDomain::unit_interval());
  const auto gain = parse_gain(a.gain);
  std::vector<Estimator> list;
  if (a.estimators.empty()) {
    list = builtin_panel();
  } else {
    for (const auto& s : detail::split(a.estimators, ',')) list.push_back(parse_estimator(std::string(detail::trim(s))));
  }
  const auto rep = risk_report(a.k, list, gain, prior);
  // best of the built-in panel, for the epsilon gap of every listed estimator
  double panel_best = -std::numeric_limits<double>::infinity();
  for (const auto& e : builtin_panel()) {
    if (e.kind == Estimator::Kind::mle && a.k == 0) continue;
    const auto hit = std::find_if(rep.entries.begin(), rep.entries.end(), [&](const RiskEntry& x) { return x.estimator == e.id(); });
    panel_best = std::max(panel_best, hit != rep.entries.end() ? hit->j : bayes_risk(a.k, e, gain, prior));
  }
  Table t{{"k", "estimator", "J", "epsilon_gap"}, {}};
  Json j = to_json(rep);
  for (std::size_t i = 0; i < rep.entries.size(); ++i) {
    const auto& e = rep.entries[i];
    const double gap = std::max(panel_best, e.j) - e.j;
    t.rows.push_back({std::to_string(a.k), e.estimator, num(e.j), num(gap)});
    j["estimators"][i]["epsilon_gap"] = gap;
  }
  emit(c, t, j);
}

struct LeCamArgs {
  double theta0 = 0.5;
  std::string prior = "uniform";
  std::string k_grid = "50,500,5000";
  std::size_t runs = 200;
  double threshold = 0.1;
  double center_shift = 0.0;
};

void run_lecam(const Common& c, const LeCamArgs& a) {
  LeCamSettings cfg;
  cfg.theta0 = a.theta0;
  cfg.k_grid = parse_int_list(a.k_grid);
  cfg.runs = a.runs;
  cfg.seed = c.required_seed("the experiment draws seeded datasets");
  cfg.threshold = a.threshold;
  cfg.center_shift = a.center_shift;
  const auto rep = tv_consistency_experiment(parse_prior(a.prior, ParamDomain::unit_interval()), cfg);
  Table t{{"k", "variant", "median", "p90", "frac_below", "boundary_exclusions", "scale_ratio_median"}, {}};
  for (const auto& row : rep.rows) {
    for (const auto& [name, s] : {std::pair{"oracle-gamma", row.oracle}, std::pair{"plugin-gamma", row.plugin}}) {
      t.rows.push_back({std::to_string(row.k), name, num(s.median), num(s.p90), num(s.frac_below),
                        std::to_string(row.boundary_exclusions), num(row.scale_ratio_median)});
    }
  }
  emit(c, t, to_json(rep));
}

// ---------------------------------------------------------------------------

/// Folds `--config FILE` (key=value lines, '#' comments) into the argument
/// list. Keys already given on the command line keep their flag value; a
/// `command=` key supplies the subcommand when none is given.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::invalid_argument, "cannot read config file " + path);

  auto given = [&](const std::string& key) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
    });
  };
  auto command_pos = std::find_if(args.begin(), args.end(), [](const std::string& a) { return kCommands.count(a) > 0; });
  std::vector<std::string> extra;
  std::string command;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto t = std::string(detail::trim(line));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    require(eq != std::string::npos, ErrorCode::parse,
            path + ":" + std::to_string(lineno) + ": expected key=value");
    auto key = std::string(detail::trim(std::string_view(t).substr(0, eq)));
    const auto value = std::string(detail::trim(std::string_view(t).substr(eq + 1)));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "command") {
      command = value;
      continue;
    }
    if (given(key)) continue;
    if (kFlags.count(key)) {
      if (value == "true" || value == "1" || value == "yes") extra.push_back("--" + key);
      continue;
    }
    extra.push_back("--" + key);
    extra.push_back(value);
  }
  if (command_pos == args.end()) {
    require(!command.empty(), ErrorCode::invalid_argument, "no command given on the command line or in the config");
    args.insert(args.begin(), command);
    command_pos = args.begin();
  }
  args.insert(command_pos + 1, extra.begin(), extra.end());
  return args;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--output,-o", c.output, "Report path (default: stdout); written atomically");
  sub->add_option("--format", c.format, "csv, json or kv")->check(CLI::IsMember({"csv", "json", "kv"}));
  sub->add_option("--seed", c.seed, "Master seed for Monte Carlo streams");
}

int run(int argc, char** argv) {
  CLI::App app{"Bernstein-von Mises numerical lab"};
  app.require_subcommand(1);
  app.add_option("--config", "Config file of key=value lines; command-line flags override it");
  Common common;

  PosteriorArgs pa;
  auto* post = app.add_subcommand("posterior", "Posterior of a scalar model: interval mass, median, grid");
  post->add_option("--model", pa.model, "binomial:n=..,s=.. | location:data=FILE,law=gaussian:1")->required();
  post->add_option("--prior", pa.prior, "Prior spec, e.g. uniform, beta:2,5");
  post->add_option("--interval", pa.interval, "lo,hi: posterior probability of the interval");
  post->add_option("--grid", pa.grid, "Write density and cdf on this many grid points");
  add_common(post, common);

  ConvergeArgs ca;
  auto* conv = app.add_subcommand("converge", "Distance to the Gaussian limit along an n-grid");
  conv->add_option("--model", ca.model, "Family (binomial)");
  conv->add_option("--freq", ca.freq, "Frequency (fixed regime) or true parameter (sampled regime)");
  conv->add_option("--prior", ca.prior, "Prior spec");
  conv->add_option("--n-grid", ca.n_grid, "Comma-separated sample sizes");
  conv->add_option("--metric", ca.metric, "tv, sup or kolmogorov");
  conv->add_option("--convention", ca.convention, "std-normal or heat-kernel");
  conv->add_option("--regime", ca.regime, "fixed or sampled");
  add_common(conv, common);

  MultinomialArgs ma;
  auto* mult = app.add_subcommand("multinomial", "Multinomial posterior against its Gaussian limit");
  mult->add_option("--counts", ma.counts, "Comma-separated category counts");
  mult->add_option("--freq", ma.freq, "Category frequencies, apportioned to --n");
  mult->add_option("--n", ma.n, "Sample size for --freq");
  mult->add_option("--prior", ma.prior, "uniform, dirichlet:a1,..,at or a product kernel (beta, pwl)");
  mult->add_option("--samples", ma.samples, "Monte Carlo draws");
  add_common(mult, common);

  NeymanArgs na;
  double lambda0 = 0.0;
  double chi0 = 0.0;
  auto* ney = app.add_subcommand("neyman", "Likelihood-ratio test: exact, chi-square and posterior probabilities");
  ney->add_option("--k", na.k, "Number of categories");
  ney->add_option("--n", na.n, "Sample size");
  ney->add_option("--p", na.p, "Hypothesized probabilities");
  auto* lam_opt = ney->add_option("--lambda0", lambda0, "Threshold on lambda");
  auto* chi_opt = ney->add_option("--chi0", chi0, "Threshold chi0 with lambda0 = exp(-chi0^2/2)");
  ney->add_flag("--exact", na.exact, "Only the exact enumeration and the chi-square approximation");
  ney->add_option("--counts", na.counts, "Observed counts for the posterior probability");
  ney->add_option("--prior", na.prior, "Simplex prior for the posterior probability");
  ney->add_option("--samples", na.samples, "Posterior draws");
  add_common(ney, common);

  RiskArgs ra;
  auto* risk = app.add_subcommand("risk", "Bayes risk of per-trial binomial estimators");
  risk->add_option("--k", ra.k, "Trials (at most 2000)");
  risk->add_option("--prior", ra.prior, "Prior spec");
  risk->add_option("--gain", ra.gain, "quadratic[:scale] or exponential:D");
  risk->add_option("--estimators", ra.estimators, "mle,posterior-mean,posterior-median,constant:c");
  add_common(risk, common);

  LeCamArgs la;
  auto* lecam = app.add_subcommand("lecam", "Seeded total-variation experiment for Bernoulli posteriors");
  lecam->add_option("--theta0", la.theta0, "True parameter");
  lecam->add_option("--prior", la.prior, "Prior spec");
  lecam->add_option("--k-grid", la.k_grid, "Comma-separated sample sizes");
  lecam->add_option("--runs", la.runs, "Datasets per k");
  lecam->add_option("--threshold", la.threshold, "Threshold for the fraction-below column");
  lecam->add_option("--center-shift", la.center_shift, "Centre at mu_k + shift / k");
  add_common(lecam, common);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(std::move(args));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: parse: " << e.what() << '\n';
    return 2;
  }
  if (lam_opt->count()) na.lambda0 = lambda0;
  if (chi_opt->count()) na.chi0 = chi0;

  if (*post) run_posterior(common, pa);
  if (*conv) run_converge(common, ca);
  if (*mult) run_multinomial(common, ma);
  if (*ney) run_neyman(common, na);
  if (*risk) run_risk(common, ra);
  if (*lecam) run_lecam(common, la);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_numerical(e.code()) ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 3;
  }
}
