#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qvision {

/// Base class of every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IngestError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct EnhanceError : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };
struct WeightError : Error { using Error::Error; };
struct EncodingError : Error { using Error::Error; };
struct CapacityError : Error { using Error::Error; };
struct TrainError : Error { using Error::Error; };
struct DegenerateModelError : Error { using Error::Error; };
struct ResampleError : Error { using Error::Error; };
struct SplitError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

/// sign with the tie convention used by every classifier here: sign(0) = +1.
inline int sign_pm(double v) { return v >= 0.0 ? +1 : -1; }

/// Three-way sign, used by the threshold post-processing formula.
inline double sign3(double v) {
    if (v > 0.0) return 1.0;
    if (v < 0.0) return -1.0;
    return 0.0;
}

/// Pipeline stages that draw randomness. Every run derives all of its
/// stage seeds from one root seed by the fixed offsets below, so that a
/// whole run is reproducible from a single --seed value.
enum class SeedStage : std::uint64_t {
    Data = 1,
    Trees = 2,
    Solver = 3,
    Split = 4,
};

inline std::uint64_t stage_seed(std::uint64_t root, SeedStage stage) {
    return root + 1000ull * static_cast<std::uint64_t>(stage);
}

} // namespace qvision
