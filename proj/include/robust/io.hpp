#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "robust/dkiter.hpp"
#include "robust/umodel.hpp"

// File formats. Malformed input raises Error(InvalidArgument) whose message
// names the offending field or CSV line.
namespace robust::io {

using Json = nlohmann::json;

// State space: {"A": [[..]], "B": .., "C": .., "D": ..}. A plant also carries
// "n_w", "n_u", "n_z", "n_y".
Json to_json(const StateSpace& sys);
StateSpace state_space_from_json(const Json& j);
Json to_json(const GeneralizedPlant& p);
GeneralizedPlant plant_from_json(const Json& j);

// [{"kind": "repeated_scalar" | "full", "dim": k}, ...]
Json to_json(const BlockStructure& s);
BlockStructure structure_from_json(const Json& j);

// State space plus {"order", "fit_error"}.
Json to_json(const FittedWeight& w);
FittedWeight fitted_weight_from_json(const Json& j);

// {"plant": <plant>, "uncertainty": <structure>, "perf_w": n, "perf_z": n}
Json to_json(const RobustPerformanceSpec& spec);
RobustPerformanceSpec spec_from_json(const Json& j);

// Decision protocol.
Json to_json(const IterationMessage& m);
IterationMessage iteration_message_from_json(const Json& j);
Json to_json(const Decision& d);
Decision decision_from_json(const Json& j);

Json to_json(const IterationRecord& r);
Json to_json(const DkResult& r);

/// Parses text as JSON; syntax errors report the byte offset.
Json parse_json(const std::string& text, const std::string& source = "input");
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

// CSV "omega,mu_upper".
void write_ssv_csv(std::ostream& os, const SsvResult& r);
std::vector<std::pair<double, double>> read_ssv_csv(std::istream& is);

// CSV "omega,re_1_1,im_1_1,re_1_2,..." in row-major entry order, 1-based.
void write_frd_csv(std::ostream& os, const FrequencyResponseData& d);
FrequencyResponseData read_frd_csv(std::istream& is);

// CSV with one header row and numeric columns.
void write_columns_csv(std::ostream& os, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

/// "lo:hi:n:log" or "lo:hi:n:lin".
FrequencyGrid parse_grid(const std::string& text);

// "fixed:order=4,iters=3", "list:2,2,2", "auto:max_order=4,tol=0.01,iters=3".
OrderStrategy parse_strategy(const std::string& text);

ResidualForm parse_form(const std::string& text);
WeightStructure parse_weight_structure(const std::string& text);  // "scalar_left", "diag_left", "scalar_right", "diag_right"

std::string_view to_string(DkPhase p);

}  // namespace robust::io
