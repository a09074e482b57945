#pragma once

#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace vqa4cir::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum class ExitStatus : int {
  success = 0,
  runtime_failure = 1,
  usage_error = 2,
  data_invalid = 3,
};

/// Runs one command line (args[0] is the program name). Results go to `out`,
/// logs and the reproducibility header to `err`.
ExitStatus dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace vqa4cir::cli
