#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cianids {

/// Failure classes raised by the library. Each maps onto one CLI exit code.
enum class Errc {
  invalid_argument,
  missing_file,
  header_mismatch,
  empty_input,
  empty_dataset,
  out_of_range,
  missing_feature,
  unknown_attack,
  unknown_feature,
  single_class,
  schema_mismatch,
  dimension_mismatch,
  malformed_model,
  malformed_file,
  io_failure,
  auc_undefined,
  internal,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::missing_file: return "missing_file";
    case Errc::header_mismatch: return "header_mismatch";
    case Errc::empty_input: return "empty_input";
    case Errc::empty_dataset: return "empty_dataset";
    case Errc::out_of_range: return "out_of_range";
    case Errc::missing_feature: return "missing_feature";
    case Errc::unknown_attack: return "unknown_attack";
    case Errc::unknown_feature: return "unknown_feature";
    case Errc::single_class: return "single_class";
    case Errc::schema_mismatch: return "schema_mismatch";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::malformed_model: return "malformed_model";
    case Errc::malformed_file: return "malformed_file";
    case Errc::io_failure: return "io_failure";
    case Errc::auc_undefined: return "auc_undefined";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace cianids
