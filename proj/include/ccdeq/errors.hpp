#ifndef CCDEQ_ERRORS_HPP_
#define CCDEQ_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ccdeq {

/// I - B is numerically singular: the disturbance-to-data map is not invertible.
class SingularMatrix : public std::runtime_error {
 public:
  explicit SingularMatrix(const std::string& what) : std::runtime_error(what) {}
};

/// A covariance factorization failed even after jitter stabilization.
class NumericalBreakdown : public std::runtime_error {
 public:
  explicit NumericalBreakdown(const std::string& what) : std::runtime_error(what) {}
};

/// Every optimizer restart failed at its starting point.
class AllRestartsFailed : public std::runtime_error {
 public:
  explicit AllRestartsFailed(const std::string& what) : std::runtime_error(what) {}
};

/// A graph violates the active structure constraints.
class InadmissibleGraph : public std::invalid_argument {
 public:
  explicit InadmissibleGraph(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed input file; carries a line/column location when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line = -1, int column = -1)
      : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& what, int line, int column) {
    std::string msg = what;
    if (line >= 0) msg += " (line " + std::to_string(line);
    if (line >= 0 && column >= 0) msg += ", column " + std::to_string(column);
    if (line >= 0) msg += ")";
    return msg;
  }
  int line_;
  int column_;
};

}  // namespace ccdeq

#endif  // CCDEQ_ERRORS_HPP_
