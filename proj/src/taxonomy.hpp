#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coverage.hpp"
#include "sim.hpp"
#include "state.hpp"
#include "util.hpp"

namespace covagent {

enum class HoleCategoryId { M1, M2, M3, R1, R2, R3 };

struct HoleCategory {
  HoleCategoryId id;
  const char* code;
  const char* name;
  // "Ceiling" holes are unreachable by simulation and become exclusions;
  // "Frontier" holes are reachable but hard and escalate to a human.
  const char* tag;
  const char* description;
};

const std::array<HoleCategory, 6>& hole_categories();
const HoleCategory& hole_category(HoleCategoryId id);
std::optional<HoleCategoryId> hole_category_from(std::string_view code);
bool is_ceiling(HoleCategoryId id);

struct HoleClassification {
  std::string point_id;
  HoleCategoryId category = HoleCategoryId::R2;
  std::string rationale;
  // "agent" when taken from the final LLM analysis, "rule" otherwise.
  std::string source;
  // True when neither the agent nor the rules classified the point and it
  // fell back to R2.
  bool defaulted = false;
};

// Extracts classifications from the agent's final analysis text: the first
// fenced JSON block holding an array of {point_id, category, rationale}.
// Unknown point ids, covered points, and unknown categories are dropped with
// a warning. Returns empty when no parseable block exists.
std::vector<HoleClassification> parse_agent_analysis(const std::string& text,
                                                     const std::set<std::string>& residual_ids,
                                                     std::vector<std::string>* warnings);

// Manifest-based heuristics for one uncovered point: tied internals are M1,
// counter bounds needing >= 2^32 vectors are M2, dead/default flags are M3.
// Returns nullopt when no rule applies. The point must be uncovered.
std::optional<HoleClassification> rule_classify(const CoveragePoint& point,
                                                const DesignManifest& manifest);

struct TaxonomyResult {
  std::vector<HoleClassification> classifications;
  std::vector<std::string> warnings;
  std::vector<std::string> conflicts;
  int defaulted_count = 0;
};

// Classifies every residual uncovered point: agent analysis takes precedence,
// then manifest rules, then the R2 default. Disagreements between agent and
// rules are kept (agent wins) and recorded as conflicts.
TaxonomyResult classify_residual(const CoverageDatabase& final_db,
                                 const std::string& agent_analysis,
                                 const DesignManifest* manifest);

// Exclusion list: one `exclude <point_id> # <code> <rationale>` line per
// Ceiling hole. Frontier holes never appear here.
std::string exclusion_list_text(const std::vector<HoleClassification>& classifications);

Json final_report_json(const AgentState& state, const TaxonomyResult& taxonomy);
std::string final_report_text(const AgentState& state, const TaxonomyResult& taxonomy);

}  // namespace covagent
