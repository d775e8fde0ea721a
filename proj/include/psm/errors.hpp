#pragma once

#include <stdexcept>
#include <string>

namespace psm {

// Base class for every error raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A functional form was evaluated where its monotonicity/convexity
// assumptions fail (R' <= 0, C' <= 0, B' <= 0, point outside domain).
struct OutOfValidityRegion : Error {
    OutOfValidityRegion(const std::string& form, double point, const std::string& why)
        : Error(form + " out of validity region at " + std::to_string(point) + ": " + why),
          form_name(form), at(point) {}
    std::string form_name;
    double at;
};

// A concealment cost was evaluated where its gradient-positivity
// requirement fails, so the model's sign system does not hold.
struct MonotonicityViolation : Error {
    explicit MonotonicityViolation(const std::string& msg) : Error(msg) {}
};

// Second-derivative structure leaves the model's assumed sign pattern.
struct SignPatternViolation : Error {
    SignPatternViolation(const std::string& entry, double value)
        : Error("sign pattern violated: " + entry + " = " + std::to_string(value)),
          entry_name(entry), entry_value(value) {}
    std::string entry_name;
    double entry_value;
};

struct MissingThinCap : Error {
    MissingThinCap() : Error("lambda = 1 requires a thin-capitalisation rule") {}
};

struct NoInteriorSolution : Error {
    explicit NoInteriorSolution(const std::string& msg) : Error(msg) {}
};

struct NonConvergence : Error {
    NonConvergence(int iters, double residual)
        : Error("solver did not converge after " + std::to_string(iters) +
                " iterations (residual " + std::to_string(residual) + ")"),
          iterations(iters), foc_residual(residual) {}
    int iterations;
    double foc_residual;
};

// Even with the indicator active the y-FOC demands y > ybar; the scenario
// sits outside the analysed regime and is reported rather than solved.
struct ExceedsThinCapRegime : Error {
    explicit ExceedsThinCapRegime(double marginal_value)
        : Error("lambda=1 FOC still demands y > ybar (L_y = " +
                std::to_string(marginal_value) + " at the cap)"),
          marginal_value_at_cap(marginal_value) {}
    double marginal_value_at_cap;
};

struct SingularSystem : Error {
    explicit SingularSystem(double det)
        : Error("comparative-statics system is singular (det = " + std::to_string(det) + ")"),
          determinant(det) {}
    double determinant;
};

struct ParseError : Error {
    ParseError(int line_no, const std::string& msg)
        : Error("parse error at line " + std::to_string(line_no) + ": " + msg),
          line(line_no) {}
    int line;
};

struct ValidationError : Error {
    ValidationError(const std::string& path, const std::string& constraint)
        : Error("invalid config at '" + path + "': " + constraint),
          field_path(path) {}
    std::string field_path;
};

struct IoError : Error {
    explicit IoError(const std::string& path) : Error("cannot open '" + path + "'"), file_path(path) {}
    std::string file_path;
};

} // namespace psm
