/*
   Copyright 2026 The Koszul Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

        http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#ifndef KOSZUL_ERRORS_HPP
#define KOSZUL_ERRORS_HPP

#include <sstream>
#include <stdexcept>
#include <string>

namespace koszul {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A polynomial product exceeded the configured total-degree cap.
class DegreeOverflow : public Error {
public:
    using Error::Error;
};

/// Invalid domain, grid or cutoff parameters.
class InvalidSpec : public Error {
public:
    using Error::Error;
};

/// Polynomial / form text could not be parsed. Line and column are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error(format(what, line, column)), line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, int line, int column) {
        std::ostringstream os;
        os << "parse error at line " << line << ", column " << column << ": " << what;
        return os.str();
    }

    int line_;
    int column_;
};

/// A numerical contract (gate) was violated. Carries the pipeline stage,
/// the measured quantity and the tolerance it was held to.
class GateFailure : public Error {
public:
    GateFailure(std::string stage, std::string gate, double measured, double tolerance)
        : Error(format(stage, gate, measured, tolerance)),
          stage_(std::move(stage)),
          gate_(std::move(gate)),
          measured_(measured),
          tolerance_(tolerance) {}

    const std::string& stage() const noexcept { return stage_; }
    const std::string& gate() const noexcept { return gate_; }
    double measured() const noexcept { return measured_; }
    double tolerance() const noexcept { return tolerance_; }

private:
    static std::string format(const std::string& stage, const std::string& gate, double measured,
                              double tolerance) {
        std::ostringstream os;
        os.precision(6);
        os << stage << ": gate '" << gate << "' failed (measured " << measured << ", tolerance "
           << tolerance << ")";
        return os.str();
    }

    std::string stage_;
    std::string gate_;
    double measured_;
    double tolerance_;
};

}  // namespace koszul

#endif
