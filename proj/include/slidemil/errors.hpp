#pragma once

#include <stdexcept>
#include <string>

namespace slidemil {

struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// File could not be read or written (maps to CLI exit code 2).
struct io_error : error {
    using error::error;
};

// Binary payload is malformed: bad magic, unsupported version, truncation,
// or non-finite values where finite ones are required.
struct format_error : error {
    using error::error;
};

// Input data violates a documented invariant (duplicate ids, label
// conflicts, unparseable fields).
struct validation_error : error {
    using error::error;
};

// Bad configuration or flag values (maps to CLI exit code 64).
struct config_error : error {
    using error::error;
};

// Geometric preconditions violated: patch larger than image, coordinates
// outside the slide, non-divisible downsample factor.
struct geometry_error : error {
    using error::error;
};

// Input is too degenerate for the operation to be defined: constant tiles,
// single-bin histograms, insufficient tissue, rank-deficient stains,
// missing classes, constant regressors.
struct degenerate_error : error {
    using error::error;
};

// Tensor/bag dimensions do not line up, or a bag is empty.
struct shape_error : error {
    using error::error;
};

// Training produced non-finite values.
struct numeric_error : error {
    using error::error;
};

}  // namespace slidemil
