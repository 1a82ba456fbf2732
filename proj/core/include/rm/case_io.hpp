#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rm/grid.hpp"
#include "rm/lt.hpp"
#include "rm/rt.hpp"
#include "rm/st.hpp"

namespace rm::cli {

struct LoadOptions {
    bool strict = false; // unknown keys become errors instead of warnings
};

/// Warnings collected while loading (unknown keys and the like).
struct LoadDiagnostics {
    std::vector<std::string> warnings;
};

/// Parses and validates a case file. Throws ParseError with line/column on
/// malformed JSON and ValidationError listing every violated invariant.
grid::GridCase load_case(const std::string& path, const LoadOptions& opts = {},
                         LoadDiagnostics* diag = nullptr);

lt::RobustLtInstance load_lt_instance(const std::string& path, const LoadOptions& opts = {},
                                      LoadDiagnostics* diag = nullptr);

st::ScenarioTree load_tree(const std::string& path);

lt::ProjectPlan load_projects(const std::string& path);

std::vector<st::PlanningDecision> load_candidates(const std::string& path,
                                                  const grid::GridCase& c);

/// FNV-1a over the file bytes, for output provenance lines.
std::uint64_t file_hash(const std::string& path);

/// Contingency set selector: "nminus1", "nminus2:<k>" or "file:<path>".
rt::ContingencyModel load_contingencies(const std::string& selector, const grid::GridCase& c,
                                        double default_line_prob = 1e-4);

} // namespace rm::cli
