#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oliva {

enum class Errc {
  degenerate_input,
  insufficient_data,
  shape_mismatch,
  schema_mismatch,
  rank_deficient,
  singular_system,
  instrument_rank_deficient,
  invalid_level,
  degenerate_trace,
  all_scores_infinite,
  degenerate_treatment,
  constant_propensity,
  weak_propensity,
  collinear_augmentation,
  unsupported_degree,
  insufficient_samples,
  invalid_dgp,
  invalid_argument,
  parse_error,
  role_error,
};

constexpr std::string_view errc_name(Errc e) noexcept {
  switch (e) {
    case Errc::degenerate_input: return "DegenerateInput";
    case Errc::insufficient_data: return "InsufficientData";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::schema_mismatch: return "SchemaMismatch";
    case Errc::rank_deficient: return "RankDeficient";
    case Errc::singular_system: return "SingularSystem";
    case Errc::instrument_rank_deficient: return "InstrumentRankDeficient";
    case Errc::invalid_level: return "InvalidLevel";
    case Errc::degenerate_trace: return "DegenerateTrace";
    case Errc::all_scores_infinite: return "AllScoresInfinite";
    case Errc::degenerate_treatment: return "DegenerateTreatment";
    case Errc::constant_propensity: return "ConstantPropensity";
    case Errc::weak_propensity: return "WeakPropensity";
    case Errc::collinear_augmentation: return "CollinearAugmentation";
    case Errc::unsupported_degree: return "UnsupportedDegree";
    case Errc::insufficient_samples: return "InsufficientSamples";
    case Errc::invalid_dgp: return "InvalidDgp";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::parse_error: return "ParseError";
    case Errc::role_error: return "RoleError";
  }
  return "Unknown";
}

// Input errors are the caller's fault (bad file, bad flag); everything else is
// a numerical failure of the estimation itself.
constexpr bool is_input_error(Errc e) noexcept {
  return e == Errc::parse_error || e == Errc::role_error ||
         e == Errc::invalid_dgp || e == Errc::invalid_argument ||
         e == Errc::invalid_level || e == Errc::unsupported_degree;
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, double value = 0.0)
      : std::runtime_error(what), code_(code), value_(value) {}

  Errc code() const noexcept { return code_; }
  std::string_view name() const noexcept { return errc_name(code_); }
  // Numeric payload, e.g. the offending condition number.
  double value() const noexcept { return value_; }

 private:
  Errc code_;
  double value_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what,
                              double value = 0.0) {
  throw Error(code, what, value);
}

}  // namespace oliva
