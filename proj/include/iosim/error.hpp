//------------------------------------------------------------------------------
//
//   Copyright 2026 The iosim Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iosim {

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed tables, out-of-range knobs, missing action-model rows.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Caller-supplied data violates an operation precondition.
class InputError : public Error
{
public:
  using Error::Error;
};

/// Remote generator failure. `retryable` is true for transport errors.
class BackendError : public Error
{
public:
  BackendError(std::string const &what, bool retryable)
    : Error(what)
    , retryable_(retryable)
  {}

  bool retryable() const noexcept
  {
    return retryable_;
  }

private:
  bool retryable_;
};

class AnalysisError : public Error
{
public:
  using Error::Error;
};

/// Structured-text parse failure; carries a 1-based line number (0 if unknown).
class ParseError : public Error
{
public:
  ParseError(std::size_t line, std::string const &what)
    : Error("line " + std::to_string(line) + ": " + what)
    , line_(line)
  {}

  std::size_t line() const noexcept
  {
    return line_;
  }

private:
  std::size_t line_;
};

class ReportError : public Error
{
public:
  using Error::Error;
};

}  // namespace iosim
