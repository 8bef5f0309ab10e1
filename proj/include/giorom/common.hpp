#pragma once

#include <stdexcept>
#include <string>

namespace giorom {

// Error taxonomy mapped to CLI exit codes: usage=2, data/shape=3, blow-up=4.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct BlowupError : std::runtime_error {
    explicit BlowupError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace giorom
