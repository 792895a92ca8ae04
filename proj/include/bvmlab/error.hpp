#pragma once

#include <stdexcept>
#include <string>

namespace bvmlab {

enum class ErrorCode {
  // input / validation
  parse,
  invalid_argument,
  out_of_domain,
  domain_boundary,
  boundary_mle,
  reversed_interval,
  count_mismatch,
  zero_count,
  dimension_cap,
  feasibility_guard,
  k_cap,
  unsupported_family,
  spec_violation,
  degenerate,
  unnormalized_input,
  // numerical failure
  non_convergence,
  domain_escape,
  zero_mass,
  non_finite,
  envelope_failure,
  all_boundary,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse: return "parse";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::out_of_domain: return "out-of-domain";
    case ErrorCode::domain_boundary: return "domain-boundary";
    case ErrorCode::boundary_mle: return "boundary-mle";
    case ErrorCode::reversed_interval: return "reversed-interval";
    case ErrorCode::count_mismatch: return "count-sum-mismatch";
    case ErrorCode::zero_count: return "zero-count";
    case ErrorCode::dimension_cap: return "dimension-cap";
    case ErrorCode::feasibility_guard: return "feasibility-guard";
    case ErrorCode::k_cap: return "k-cap";
    case ErrorCode::unsupported_family: return "unsupported-family";
    case ErrorCode::spec_violation: return "spec-violation";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::unnormalized_input: return "unnormalized-input";
    case ErrorCode::non_convergence: return "non-convergence";
    case ErrorCode::domain_escape: return "domain-escape";
    case ErrorCode::zero_mass: return "zero-mass";
    case ErrorCode::non_finite: return "non-finite";
    case ErrorCode::envelope_failure: return "envelope-failure";
    case ErrorCode::all_boundary: return "all-boundary";
  }
  return "unknown";
}

/// True for failures of a numerical procedure on valid input (CLI exit 3);
/// everything else is a validation failure (CLI exit 2).
inline bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::non_convergence:
    case ErrorCode::domain_escape:
    case ErrorCode::zero_mass:
    case ErrorCode::non_finite:
    case ErrorCode::envelope_failure:
    case ErrorCode::all_boundary:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace bvmlab
