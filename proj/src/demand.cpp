#include "ddnav/demand.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ddnav/error.hpp"

namespace ddnav {

namespace {

bool covers(const std::set<std::string>& attrs, const std::set<std::string>& required) {
  return std::includes(attrs.begin(), attrs.end(), required.begin(), required.end());
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::set<std::string>& items) {
  std::string out;
  for (const auto& i : items) {
    if (!out.empty()) out += ", ";
    out += i;
  }
  return out;
}

}  // namespace

MatchResult match(const DemandOntology& ontology, const DemandQuery& query) {
  if (trim(query.instruction).empty()) throw ValidationError("demand query has an empty instruction");
  MatchResult r;
  r.properties = ontology.lookup_demand(query.instruction);
  if (r.properties.empty()) throw UnknownDemand("no ontology phrase matches '" + query.instruction + "'");
  for (const auto& d : query.detected) {
    if (covers(d.attributes, r.properties)) r.matched.push_back(d);
  }
  r.rationale = "requires {" + join(r.properties) + "}; " + std::to_string(r.matched.size()) + " of " +
                std::to_string(query.detected.size()) + " detected objects cover it";
  return r;
}

MatchResult match_or_empty(const DemandOntology& ontology, const DemandQuery& query) {
  try {
    return match(ontology, query);
  } catch (const UnknownDemand& e) {
    MatchResult r;
    r.rationale = e.what();
    r.warnings.push_back(e.what());
    return r;
  }
}

llm::Bindings demand_bindings(const DemandQuery& query) {
  return {{"instruction", query.instruction}, {"objects", format_objects(query.detected)}};
}

MatchResult parse_match_reply(const std::string& reply, const std::vector<DetectedObject>& detected) {
  static const std::regex objects_re(R"(^\s*objects?\s*:\s*(.*?)\s*$)", std::regex::icase);
  static const std::regex attrs_re(R"(^\s*(?:attributes|properties)\s*:\s*(.*?)\s*$)", std::regex::icase);
  static const std::regex ident_re(R"([A-Za-z][A-Za-z0-9_]*)");

  MatchResult r;
  std::optional<std::vector<std::string>> names;
  std::vector<std::string> lines;
  {
    std::istringstream in(reply);
    std::string line;
    while (std::getline(in, line)) {
      if (!trim(line).empty()) lines.push_back(line);
    }
  }
  for (const auto& line : lines) {
    std::smatch m;
    if (!names && std::regex_match(line, m, objects_re)) {
      names = split_list(m[1].str());
    } else if (std::regex_match(line, m, attrs_re)) {
      for (auto& a : split_list(m[1].str())) {
        if (lower(a) != "none") r.properties.insert(a);
      }
    }
  }
  if (!names) {
    if (lines.size() != 1) throw ParseError("demand reply has no 'Objects:' line");
    names = split_list(lines.front());
    for (const auto& n : *names) {
      if (!std::regex_match(n, ident_re)) throw ParseError("demand reply item '" + n + "' is not an object name");
    }
  }

  std::set<std::size_t> picked;
  for (const auto& name : *names) {
    const auto key = lower(name);
    if (key == "none") continue;
    bool found = false;
    for (std::size_t i = 0; i < detected.size(); ++i) {
      if (lower(detected[i].object_id) == key) {
        picked.insert(i);
        found = true;
      }
    }
    if (!found) {
      for (std::size_t i = 0; i < detected.size(); ++i) {
        if (lower(detected[i].category) == key) {
          picked.insert(i);
          found = true;
        }
      }
    }
    if (!found) r.warnings.push_back("dropped '" + name + "': not among the detected objects");
  }
  for (auto i : picked) {
    if (!covers(detected[i].attributes, r.properties)) {
      r.warnings.push_back("dropped '" + detected[i].object_id + "': attributes do not cover the demand");
      continue;
    }
    r.matched.push_back(detected[i]);
  }
  r.rationale = "backend selected " + std::to_string(r.matched.size()) + " object(s)";
  return r;
}

std::string format_match_reply(const MatchResult& result) {
  std::string objects;
  for (const auto& d : result.matched) {
    if (!objects.empty()) objects += ", ";
    objects += d.object_id;
  }
  return "Attributes: " + (result.properties.empty() ? std::string("none") : join(result.properties)) +
         "\nObjects: " + (objects.empty() ? std::string("none") : objects);
}

MatchResult match_llm(llm::ChatBackend& backend, const llm::PromptTemplate& prompt, const DemandQuery& query) {
  const std::string system = llm::render(prompt, demand_bindings(query));
  try {
    const std::string reply = backend.complete(system, query.instruction);
    MatchResult r = parse_match_reply(reply, query.detected);
    for (const auto& w : r.warnings) spdlog::warn("demand match: {}", w);
    return r;
  } catch (const ParseError& e) {
    spdlog::warn("demand match reply unusable, treating as no match: {}", e.what());
    MatchResult r;
    r.rationale = "reply could not be parsed";
    r.warnings.push_back(e.what());
    return r;
  } catch (const BackendError& e) {
    spdlog::warn("demand match backend failed, treating as no match: {}", e.what());
    MatchResult r;
    r.rationale = "backend unavailable";
    r.warnings.push_back(e.what());
    return r;
  }
}

std::size_t export_demand_qa(const DemandOntology& ontology, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StorageError("cannot write " + path.string());
  std::size_t n = 0;
  for (const auto& [phrase, attrs] : ontology.demand_phrases()) {
    const auto cats = ontology.categories_covering(attrs);
    std::string cat_list;
    for (const auto& c : cats) {
      if (!cat_list.empty()) cat_list += ", ";
      cat_list += c;
    }
    nlohmann::ordered_json a;
    a["question"] = "Instruction: " + phrase + "\nWhich attributes must an object have to satisfy this demand?";
    a["answer"] = "Attributes: " + join(attrs);
    a["source"] = "ontology";
    a["kind"] = "attributes";
    out << a.dump() << '\n';
    nlohmann::ordered_json o;
    o["question"] = "Instruction: " + phrase + "\nWhich object categories satisfy this demand?";
    o["answer"] = "Objects: " + (cat_list.empty() ? std::string("none") : cat_list);
    o["source"] = "ontology";
    o["kind"] = "objects";
    out << o.dump() << '\n';
    n += 2;
  }
  if (!out) throw StorageError("write failed for " + path.string());
  return n;
}

}  // namespace ddnav
