#pragma once

#include <stdexcept>
#include <string>

namespace sf {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnsupportedEvaluation : Error {
    using Error::Error;
};
struct NonFinite : Error {
    using Error::Error;
};
struct NoSampler : Error {
    using Error::Error;
};
struct DivergentMoment : Error {
    using Error::Error;
};
struct UnsupportedBody : Error {
    using Error::Error;
};
struct IsotropyViolated : Error {
    using Error::Error;
};
struct NotIntegrable : Error {
    using Error::Error;
};
struct QuadratureDiverged : Error {
    using Error::Error;
};
struct FrameNotOrthonormal : Error {
    using Error::Error;
};
struct NonPositiveCf : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};
struct NotComparable : Error {
    using Error::Error;
};
struct NonPositiveValue : Error {
    using Error::Error;
};
/// Malformed specification objects (JSON configs, CLI inputs).
struct SpecError : Error {
    using Error::Error;
};

}  // namespace sf
