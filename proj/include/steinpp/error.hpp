#ifndef STEINPP_ERROR_HPP
#define STEINPP_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace steinpp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! A rejection sampler gave up after its attempt budget.
class AcceptanceFailure : public Error {
 public:
  AcceptanceFailure(const std::string& what, std::size_t attempts)
      : Error(what + " (no acceptance after " + std::to_string(attempts) + " attempts)"),
        attempts_(attempts) {}
  [[nodiscard]] std::size_t attempts() const noexcept { return attempts_; }

 private:
  std::size_t attempts_;
};

//! The requested (family, transform) pair has no closed form.
class NotClosed : public Error {
 public:
  using Error::Error;
};

//! Kernel spectrum outside [0, 1).
class SpectrumError : public Error {
 public:
  using Error::Error;
};

//! Stored count law does not cover the requested index or draw.
class TruncationError : public Error {
 public:
  using Error::Error;
};

}  // namespace steinpp

#endif  // STEINPP_ERROR_HPP
