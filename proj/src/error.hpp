#pragma once

#include <stdexcept>
#include <string>

namespace fqa {

// Error categories mirror the process exit-code contract:
// 1 usage, 2 data, 3 numerical.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fqa
