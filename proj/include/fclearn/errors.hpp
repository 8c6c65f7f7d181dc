#pragma once

#include <stdexcept>
#include <string>

namespace fclearn {

// Bad flags, malformed config, unusable argument combinations.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or unusable input data (CSV, JSON fronts, sidecars).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fclearn
