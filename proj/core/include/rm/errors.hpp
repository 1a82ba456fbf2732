#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rm {

struct DisconnectedNetwork : std::runtime_error {
    explicit DisconnectedNetwork(const std::string& what) : std::runtime_error(what) {}
};

struct SingularSystem : std::runtime_error {
    explicit SingularSystem(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalBreakdown : std::runtime_error {
    explicit NumericalBreakdown(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownEvent : std::runtime_error {
    explicit UnknownEvent(const std::string& what) : std::runtime_error(what) {}
};

struct EmptySample : std::runtime_error {
    explicit EmptySample(const std::string& what) : std::runtime_error(what) {}
};

struct NoCandidates : std::runtime_error {
    explicit NoCandidates(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Carries the full list of violated rules so callers can report all of them.
struct ValidationError : std::runtime_error {
    std::vector<std::string> violations;
    explicit ValidationError(std::vector<std::string> v)
        : std::runtime_error(join(v)), violations(std::move(v)) {}

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "validation failed:";
        for (const auto& m : v) {
            s += "\n  - " + m;
        }
        return s;
    }
};

struct InfeasibleSchedule : ValidationError {
    using ValidationError::ValidationError;
};

struct InfeasiblePlan : ValidationError {
    using ValidationError::ValidationError;
};

} // namespace rm
