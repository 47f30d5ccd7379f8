#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edde {

/// Bad shapes, out-of-range arguments, malformed configuration values.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite loss or gradient during training.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, int epoch, int round = -1)
        : std::runtime_error(what), epoch_(epoch), round_(round) {}

    int epoch() const noexcept { return epoch_; }
    /// Boosting round / generation / cycle, or -1 when not known.
    int round() const noexcept { return round_; }

private:
    int epoch_;
    int round_;
};

/// Input file problems. Row and column are 1-based; 0 means "not applicable".
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
        : std::runtime_error(format(what, row, column)), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t row, std::size_t column) {
        if (row == 0) return what;
        std::string s = what + " (row " + std::to_string(row);
        if (column != 0) s += ", column " + std::to_string(column);
        return s + ")";
    }

    std::size_t row_;
    std::size_t column_;
};

}  // namespace edde
