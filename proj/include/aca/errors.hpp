#pragma once

#include <stdexcept>
#include <string>

namespace aca {

// Base class for anything that went wrong while reading external files.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Header / column structure of a tabular file does not match expectations.
struct schema_error : io_error {
  using io_error::io_error;
};

// A cell or line could not be decoded; message carries the row index.
struct parse_error : io_error {
  using io_error::io_error;
};

// Binary layout problem: bad magic, truncated payload, inconsistent counts.
struct format_error : io_error {
  using io_error::io_error;
};

}  // namespace aca
