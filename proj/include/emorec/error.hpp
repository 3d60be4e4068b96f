#pragma once

#include <stdexcept>
#include <string>

namespace emorec {

// Every failure raised by the library carries a short machine-readable class
// name (for the CLI's single-line error report) plus a human message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define EMOREC_DEFINE_ERROR(Name, tag)                                        \
  class Name : public Error {                                                 \
   public:                                                                    \
    explicit Name(const std::string& message) : Error(tag, message) {}        \
  };

EMOREC_DEFINE_ERROR(ShapeError, "shape_error")
EMOREC_DEFINE_ERROR(PreconditionError, "precondition_error")
EMOREC_DEFINE_ERROR(EmptySequenceError, "empty_sequence_error")
EMOREC_DEFINE_ERROR(IndexError, "index_error")
EMOREC_DEFINE_ERROR(ConfigError, "config_error")
EMOREC_DEFINE_ERROR(NumericError, "numeric_error")
EMOREC_DEFINE_ERROR(FormatError, "format_error")
EMOREC_DEFINE_ERROR(CoverageError, "coverage_error")
EMOREC_DEFINE_ERROR(DegenerateDataError, "degenerate_data_error")
EMOREC_DEFINE_ERROR(MetricError, "metric_error")
EMOREC_DEFINE_ERROR(IoError, "io_error")

#undef EMOREC_DEFINE_ERROR

}  // namespace emorec
