#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace geocalc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Nearest-point projection is undefined here (equidistant set of the manifold).
class SingularPoint : public std::runtime_error {
public:
    explicit SingularPoint(const std::string& what) : std::runtime_error(what) {}
};

/// All kernel weights vanished (non-finite input slipped through the max-shift).
class DegenerateWeights : public std::runtime_error {
public:
    explicit DegenerateWeights(const std::string& what) : std::runtime_error(what) {}
};

/// A block pair is (numerically) antipodal; the angle gradient is singular there.
class AntipodalBlock : public std::runtime_error {
public:
    explicit AntipodalBlock(const std::string& what) : std::runtime_error(what) {}
};

/// Training aborted on a non-finite loss value.
class NonFiniteLoss : public std::runtime_error {
public:
    NonFiniteLoss(const std::string& what, long step) : std::runtime_error(what), step(step) {}
    long step;
};

/// Extrapolation from two coincident points has no defined direction.
class DegenerateStep : public std::runtime_error {
public:
    explicit DegenerateStep(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file; message names file, line and offending field.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace geocalc
