#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace swale {

/// Base class of every failure raised by the simulator.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;

    /// Short machine-readable tag, used in structured error lines.
    [[nodiscard]] virtual const char* kind() const noexcept { return "Error"; }
};

/// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* kind() const noexcept override { return "ContractViolation"; }
};

class MeshConstructionError : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* kind() const noexcept override { return "MeshConstructionError"; }
};

/// Node movement produced a triangle with non-positive signed area.
class MeshTangled : public Error {
public:
    MeshTangled(std::size_t triangle, double area, long step = -1)
        : Error(message(triangle, area, step)), triangle_(triangle), area_(area), step_(step) {}

    [[nodiscard]] const char* kind() const noexcept override { return "MeshTangled"; }
    [[nodiscard]] std::size_t triangle() const noexcept { return triangle_; }
    [[nodiscard]] double area() const noexcept { return area_; }
    [[nodiscard]] long step() const noexcept { return step_; }

    [[nodiscard]] MeshTangled at_step(long step) const { return {triangle_, area_, step}; }

private:
    static std::string message(std::size_t tri, double area, long step) {
        std::string msg = "triangle " + std::to_string(tri) + " has signed area " + std::to_string(area);
        if (step >= 0) msg += " at step " + std::to_string(step);
        return msg;
    }

    std::size_t triangle_;
    double area_;
    long step_;
};

/// Two non-adjacent segments of the moving boundary loop intersect.
class BoundaryCollision : public Error {
public:
    BoundaryCollision(std::size_t segment_a, std::size_t segment_b, long step = -1)
        : Error("boundary segments " + std::to_string(segment_a) + " and " + std::to_string(segment_b) +
                " intersect" + (step >= 0 ? " at step " + std::to_string(step) : std::string{})),
          a_(segment_a), b_(segment_b), step_(step) {}

    [[nodiscard]] const char* kind() const noexcept override { return "BoundaryCollision"; }
    [[nodiscard]] std::size_t segment_a() const noexcept { return a_; }
    [[nodiscard]] std::size_t segment_b() const noexcept { return b_; }
    [[nodiscard]] long step() const noexcept { return step_; }

private:
    std::size_t a_;
    std::size_t b_;
    long step_;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what + " (relative residual " + std::to_string(residual) + ")"), residual_(residual) {}

    [[nodiscard]] const char* kind() const noexcept override { return "SolverError"; }
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class FixedPointDiverged : public Error {
public:
    FixedPointDiverged(int iterations, double last_change)
        : Error("fixed point did not converge after " + std::to_string(iterations) +
                " iterations (last relative change " + std::to_string(last_change) + ")"),
          iterations_(iterations), last_change_(last_change) {}

    [[nodiscard]] const char* kind() const noexcept override { return "FixedPointDiverged"; }
    [[nodiscard]] int iterations() const noexcept { return iterations_; }
    [[nodiscard]] double last_change() const noexcept { return last_change_; }

private:
    int iterations_;
    double last_change_;
};

/// Non-finite values appeared during a step.
class StepError : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* kind() const noexcept override { return "StepError"; }
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::string key = {}, int line = 0)
        : Error(format(what, key, line)), key_(std::move(key)), line_(line) {}

    [[nodiscard]] const char* kind() const noexcept override { return "ConfigError"; }
    [[nodiscard]] const std::string& key() const noexcept { return key_; }
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& what, const std::string& key, int line) {
        std::string msg;
        if (line > 0) msg += "line " + std::to_string(line) + ": ";
        if (!key.empty()) msg += "key '" + key + "': ";
        return msg + what;
    }

    std::string key_;
    int line_;
};

}  // namespace swale
