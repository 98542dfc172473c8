#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdmp {

enum class ErrorCode {
  numerical_blowup,
  model_contract,
  scheme_contract,
  runaway_model,
  domain,
  impossible_skeleton,
  support_violation,
  unsupported,
  ce_initialization,
  ce_objective,
  invalid_argument,
  config,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pdmp
