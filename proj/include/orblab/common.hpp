#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace orblab {

inline constexpr double kPi = 3.14159265358979323846;

/// Base class for all solver/geometry errors raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct RadiusExceeded : Error { using Error::Error; };
struct TooFarFromSingularLocus : Error { using Error::Error; };
struct EmptySingularLocus : Error { using Error::Error; };
struct NoSignChange : Error { using Error::Error; };
struct ToleranceNotReached : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct NoPositivePart : Error { using Error::Error; };
struct BumpTooWide : Error { using Error::Error; };
struct NotConcentrated : Error { using Error::Error; };
struct ZeroFunction : Error { using Error::Error; };
struct SupportTooWide : Error { using Error::Error; };
struct Diverged : Error { using Error::Error; };

/// Error annotated with the pipeline stage that raised it.
struct PipelineError : Error {
    std::string stage;
    PipelineError(const std::string& stage_, const std::string& what)
        : Error("[" + stage_ + "] " + what), stage(stage_) {}
};

/// Pairwise (cascade) summation. Deterministic reduction order, O(log n) error growth.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(std::span<const double>(v));
}

inline double sq(double x) { return x * x; }

inline constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace orblab
