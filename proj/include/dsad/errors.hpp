#pragma once

#include <stdexcept>
#include <string>

namespace dsad {

// Error taxonomy used across the library. The CLI maps these onto exit
// codes: config_error -> 2, data/format errors -> 3, numeric_error -> 4.

struct invalid_parameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct dimension_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct capacity_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct undefined_metric : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct incomplete_report : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dsad
