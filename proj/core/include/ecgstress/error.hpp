#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace ecgstress {

// Malformed, missing or inconsistent input (files, shapes, preconditions).
// The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure discovered while computing: divergence, non-finite values.
// The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs `fn` and rethrows any library error with `stage` prefixed to the
// message, preserving the error category.
template <typename Fn>
decltype(auto) with_stage(std::string_view stage, Fn&& fn) {
  try {
    return std::forward<Fn>(fn)();
  } catch (const InputError& e) {
    throw InputError(std::string(stage) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string(stage) + ": " + e.what());
  }
}

}  // namespace ecgstress
