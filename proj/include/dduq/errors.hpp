#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dduq {

/// Invalid or inconsistent configuration (bad keys, patch off the top face, oversized rules).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a law (e.g. porosity not in (0,1)).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// API misuse: mismatched sizes, levels, or grids.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// An iterative solver ran out of iterations or stagnated.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}

    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// A sampled porosity field left (0,1) at some vertex.
class InvalidRealizationError : public std::runtime_error {
public:
    InvalidRealizationError(const std::string& what, std::size_t vertex, double value)
        : std::runtime_error(what), vertex_(vertex), value_(value) {}

    std::size_t vertex() const noexcept { return vertex_; }
    double value() const noexcept { return value_; }

private:
    std::size_t vertex_;
    double value_;
};

/// Statistics were requested over a set containing failed scenarios.
class ScenarioFailureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dduq
