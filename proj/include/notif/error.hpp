#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace notif {

// Instance or argument violates a documented invariant.
class InvalidInstance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input file. line() is 1-based, 0 when not line-oriented.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(format(file, line, what)), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  static std::string format(const std::string& file, std::size_t line,
                            const std::string& what) {
    std::string out = file;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + what;
  }
  std::size_t line_;
};

// Some buyer cannot obtain positive utility under any feasible allocation.
class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace notif
