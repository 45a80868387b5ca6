#pragma once

// errors.hpp — exception taxonomy shared by the whole toolkit.
//
// Exit-code contract used by the CLI:
//   1 config, 2 data, 3 provider, 4 invariant.

#include <stdexcept>
#include <string>

namespace nlikit {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual int exit_code() const { return 1; }
};

// Bad configuration: unknown method names, unresolvable templates, missing
// config keys.
class ConfigError : public Error {
public:
  using Error::Error;
  int exit_code() const override { return 1; }
};

// Bad input data: parse failures, sizing errors, unknown labels, coverage
// gaps.
class DataError : public Error {
public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

// Provider/gateway trouble: transport failures after retries, rate limits,
// provider rejections, capability mismatches.
class ProviderError : public Error {
public:
  using Error::Error;
  int exit_code() const override { return 3; }
};

class CapabilityError : public ProviderError {
public:
  using ProviderError::ProviderError;
};

// A domain invariant was violated: malformed probability vectors, swap-plan
// constraint breaches, label-composition misuse.
class InvariantError : public Error {
public:
  using Error::Error;
  int exit_code() const override { return 4; }
};

}  // namespace nlikit
