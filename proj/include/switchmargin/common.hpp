#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace switchmargin {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape or finiteness precondition violated.
struct DimensionError : Error {
    using Error::Error;
};

// A numerical routine failed to converge or overflowed.
struct NumericalError : Error {
    using Error::Error;
};

// Nominal dynamics are not Hurwitz where an algorithm requires it.
struct NotHurwitzError : Error {
    using Error::Error;
};

// A configured cap (dimension, sweep, event count) was exceeded.
struct CapExceededError : Error {
    using Error::Error;
};

// Problem/signal file could not be parsed; message carries line context.
struct ParseError : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw DimensionError(msg);
}

inline void require_finite(const Mat& m, const std::string& name) {
    if (!m.allFinite()) throw DimensionError(name + ": entries must be finite");
}

inline void require_square(const Mat& m, const std::string& name) {
    if (m.rows() != m.cols())
        throw DimensionError(name + ": matrix must be square, got " + std::to_string(m.rows()) +
                             "x" + std::to_string(m.cols()));
}

}  // namespace switchmargin
