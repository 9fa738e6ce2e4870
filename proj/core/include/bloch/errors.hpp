#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bloch {

// Error taxonomy mirrored by the CLI exit codes: config 2, numerical 3, I/O 4.

// Invalid user input: malformed config text, inconsistent physical setup
// (singular lattice, realness violations, out-of-range parameters).
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A computation left its validity domain: gap closure, norm drift,
// non-quantized Chern sums, grids too coarse for a well-defined answer.
// `kind` is a stable machine-readable tag, `where` optional structured
// context (already-serialized JSON object, "{}" if none).
class numerical_error : public std::runtime_error {
public:
  numerical_error(std::string kind, const std::string& msg, std::string where = "{}")
      : std::runtime_error(msg), kind_(std::move(kind)), where_(std::move(where)) {}

  const std::string& kind() const noexcept { return kind_; }
  const std::string& where_json() const noexcept { return where_; }

private:
  std::string kind_;
  std::string where_;
};

class io_error : public std::runtime_error {
public:
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bloch
