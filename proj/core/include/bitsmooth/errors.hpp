#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bitsmooth {

/// Model or argument outside the domain where an operation is defined
/// (for example a stationary quantity requested for |alpha| = 1).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An inner matrix of an information recursion could not be factorized.
class NumericalDegeneracy : public std::runtime_error {
public:
    NumericalDegeneracy(const std::string& what, std::int64_t block)
        : std::runtime_error(what + " (block " + std::to_string(block) + ")"),
          block_(block) {}

    std::int64_t block() const noexcept { return block_; }

private:
    std::int64_t block_;
};

class QuadratureFailure : public std::runtime_error {
public:
    QuadratureFailure(const std::string& what, std::size_t node, double abscissa)
        : std::runtime_error(what + " at node " + std::to_string(node) +
                             " (theta = " + std::to_string(abscissa) + ")"),
          node_(node), abscissa_(abscissa) {}

    std::size_t node() const noexcept { return node_; }
    double abscissa() const noexcept { return abscissa_; }

private:
    std::size_t node_;
    double abscissa_;
};

/// Fixed-point iteration hit its cap; carries the last two iterates.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last, double previous)
        : std::runtime_error(what), last_(last), previous_(previous) {}

    double last() const noexcept { return last_; }
    double previous() const noexcept { return previous_; }

private:
    double last_;
    double previous_;
};

/// Grid posterior lost all of its mass.
class GridDegeneracy : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bitsmooth
