#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace reldata {

enum class Task { QC, QI };

/// Lowercase wire name: "qc" or "qi".
std::string_view to_string(Task task);
/// Accepts "qc"/"qi" in any case; throws DataError otherwise.
Task parse_task(std::string_view text);

enum class Origin { Original, Translated, SyntheticNegative };

std::string_view to_string(Origin origin);
Origin parse_origin(std::string_view text);

// Error taxonomy. The CLI maps these onto exit codes:
// ConfigError -> 1 (usage), DataError -> 2, ProviderError -> 3.

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ProviderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace reldata
