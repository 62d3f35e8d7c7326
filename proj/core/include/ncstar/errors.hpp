#pragma once

#include <stdexcept>
#include <string>

namespace ncstar {

// Category drives the CLI exit code: Input/Parse/Admissibility -> 2, Guard -> 3,
// everything else -> 1.
enum class ErrorKind { Input, Parse, Admissibility, Degenerate, Guard, Conversion, Computation };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(int column, const std::string& what)
        : Error(ErrorKind::Parse, "column " + std::to_string(column) + ": " + what), column_(column) {}
    int column() const noexcept { return column_; }

private:
    int column_;
};

} // namespace ncstar
