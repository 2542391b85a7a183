#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dside/attributes.hpp"
#include "dside/flops.hpp"
#include "dside/grouping.hpp"
#include "dside/selection.hpp"
#include "dside/similarity.hpp"

namespace dside {

using Json = nlohmann::ordered_json;

// Structured (JSON) forms. Every *_from_json throws FormatError with the
// offending field named.

Json to_json(const ClassGrouping& g);
ClassGrouping grouping_from_json(const Json& j);

Json to_json(const SimilarityReport& r);
SimilarityReport report_from_json(const Json& j);

Json to_json(const ConfigKey& k);
ConfigKey config_from_json(const Json& j);

/// `is_best` is the derived best-so-far flag at serialization time.
Json to_json(const LogEntry& e, bool is_best);
LogEntry log_entry_from_json(const Json& j);
Json to_json(const DecisionLog& log);

Json to_json(const ScaleStats& s);
Json to_json(const FlopsReport& r);
Json to_json(const GuidanceRow& row);
Json to_json(const ColorDecision& d);
Json to_json(const PerClassColorDecision& d);
Json to_json(const LadderResult& l);
Json to_json(const Recommendation& r);

std::string report_markdown(const SimilarityReport& r);

}  // namespace dside
