#pragma once

#include <stdexcept>
#include <string>

namespace ragrasp {

/// Base class for all library errors. The CLI maps each subclass to a
/// distinct exit code (see tools/ragrasp.cpp and the README table).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value (bad flag, gamma1 > gamma2, ...).
struct ParameterError : Error {
    using Error::Error;
};

/// Malformed input file (PCD header, scene file, dataset magic, ...).
struct FormatError : Error {
    using Error::Error;
};

/// Structurally valid input with bad content (NaN coordinate, bad label, ...).
struct DataError : Error {
    using Error::Error;
};

/// Model file missing, truncated, or of the wrong architecture.
struct ModelError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

/// Planning was asked to run on a cloud with no object points left after
/// plane removal.
struct NoObjectError : Error {
    using Error::Error;
};

/// Training produced a non-finite loss.
struct DivergenceError : Error {
    using Error::Error;
};

/// RANSAC never saw a non-collinear point triple.
struct SegmentationError : Error {
    using Error::Error;
};

/// Scene rejection sampling gave up (drop region too dense).
struct RegionTooDenseError : Error {
    using Error::Error;
};

}  // namespace ragrasp
