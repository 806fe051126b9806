#pragma once

#include <iosfwd>

namespace dl4::cli {

enum ExitStatus : int {
  kSuccess = 0,
  kComparisonFailure = 1,  // check mismatch, or a measurement that found nothing to measure
  kUsageError = 2,
  kIoError = 3,  // I/O, parse, or domain error in inputs
};

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dl4::cli
