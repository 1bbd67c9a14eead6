#pragma once

#include <stdexcept>
#include <string>

namespace mixbasis {

/// Base class for every error the library raises.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Bad user configuration: malformed basis strings, invalid k, bad options.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Input data that cannot be used: parse failures, values outside a basis
/// domain, degenerate columns.
class DataError : public Error
{
public:
  using Error::Error;
};

/// Argument outside the domain of a mathematical function.
class DomainError : public Error
{
public:
  using Error::Error;
};

/// A size or memory guard was exceeded (enumeration limits, dense
/// consensus budgets).
class GuardError : public Error
{
public:
  using Error::Error;
};

/// Numerical breakdown: every candidate has zero probability, etc.
class NumericError : public Error
{
public:
  using Error::Error;
};

} // namespace mixbasis
