#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "ddnav/llm.hpp"
#include "ddnav/perception.hpp"
#include "ddnav/world.hpp"

namespace ddnav {

struct DemandQuery {
  std::string instruction;
  std::vector<DetectedObject> detected;
};

struct MatchResult {
  std::set<std::string> properties;
  std::vector<DetectedObject> matched;  // subset of the query's detections, detection order
  std::string rationale;
  std::vector<std::string> warnings;

  bool empty() const { return matched.empty(); }
};

// Strict coverage: an object matches only if its attributes contain every
// demand property. Throws UnknownDemand when the instruction matches no
// phrase and ValidationError for an empty instruction.
MatchResult match(const DemandOntology& ontology, const DemandQuery& query);

// Same, but an unknown demand yields an empty match (the caller explores).
MatchResult match_or_empty(const DemandOntology& ontology, const DemandQuery& query);

// Asks a chat backend. The reply is expected as
//   Attributes: a, b
//   Objects: <id or category>, ...   ("none" for no match)
// or a bare comma-separated list of identifiers. Names not present in the
// detections are dropped with a warning. Transport and parse failures yield
// an empty match carrying a warning.
MatchResult match_llm(llm::ChatBackend& backend, const llm::PromptTemplate& prompt, const DemandQuery& query);

llm::Bindings demand_bindings(const DemandQuery& query);
// Strict parser behind match_llm; throws ParseError.
MatchResult parse_match_reply(const std::string& reply, const std::vector<DetectedObject>& detected);
// Canonical reply text for a result (used by the offline mock).
std::string format_match_reply(const MatchResult& result);

// QA pairs over the ontology: one attribute question and one object question
// per demand phrase. Returns the number of records written.
std::size_t export_demand_qa(const DemandOntology& ontology, const std::filesystem::path& path);

}  // namespace ddnav
