#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace herald {

class NotFoundError : public std::runtime_error {
public:
    explicit NotFoundError(const std::string &what) : std::runtime_error(what) {}
};

class CalibrationError : public std::runtime_error {
public:
    explicit CalibrationError(const std::string &what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string &what) : std::runtime_error(what) {}
};

inline constexpr uint64_t kFnvOffset = 1469598103934665603ull;
inline constexpr uint64_t kFnvPrime = 1099511628211ull;

inline uint64_t fnv1a64(std::string_view data, uint64_t seed = kFnvOffset) {
    uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::string to_hex(uint64_t value);

// Event logs round real-valued fields to 3 decimals; keeps files compact and
// their byte content reproducible across runs.
inline double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

std::string read_file(const std::string &path);
void write_file_atomic(const std::string &path, const std::string &content);

} // namespace herald
