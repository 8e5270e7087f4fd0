#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace doslab {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Enumeration or allocation would exceed the configured point budget.
class BudgetExceeded : public Error {
public:
  BudgetExceeded(const std::string& what, std::uint64_t requested, std::uint64_t budget)
      : Error(what + " (requested " + std::to_string(requested) + ", budget " +
              std::to_string(budget) + ")"),
        requested_(requested), budget_(budget) {}

  std::uint64_t requested() const noexcept { return requested_; }
  std::uint64_t budget() const noexcept { return budget_; }

private:
  std::uint64_t requested_;
  std::uint64_t budget_;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class SolverError : public Error {
public:
  using Error::Error;
};

/// Default enumeration budget (points per enumeration). The environment
/// variable DOSLAB_BUDGET overrides it when set to a positive integer.
std::uint64_t default_point_budget();

inline constexpr std::uint64_t kBuiltinPointBudget = 50'000'000;

}  // namespace doslab
