#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

namespace opsizer {

/// splitmix64 finalizer; used to derive independent seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                    std::uint64_t c = 0) {
    return mix_seed(mix_seed(mix_seed(mix_seed(master) ^ a) ^ b) ^ c);
}

/// Portable draws on top of mt19937_64 (the std distributions are
/// implementation-defined, which would break cross-toolchain reproducibility).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform in [0, n), rejection-sampled.
    std::size_t index(std::size_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return static_cast<std::size_t>(r % n);
    }

private:
    std::mt19937_64 engine_;
};

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 or 1 = inline).
/// Work is claimed dynamically; callers write results by index.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

enum class LogLevel { Info, Warning };
using LogSink = std::function<void(LogLevel, std::string_view)>;

/// Replaces the process-wide sink (default: stderr). Returns the previous sink.
LogSink set_log_sink(LogSink sink);
void log_message(LogLevel level, std::string_view msg);
inline void log_warning(std::string_view msg) { log_message(LogLevel::Warning, msg); }
inline void log_info(std::string_view msg) { log_message(LogLevel::Info, msg); }

}  // namespace opsizer
