#pragma once

// JSON documents: model specs, parameter sets, fit results, generator
// configs and inference reports.

#include <json.hpp>
#include <string>

#include "volatix/estimation.hpp"
#include "volatix/inference.hpp"
#include "volatix/synthetic.hpp"

namespace volatix::json_io {

using nlohmann::json;

json to_json(const ModelSpec& spec);
/// Throws InvalidParameter on unknown class/scheme names or a bad shape.
ModelSpec spec_from_json(const json& j);

json to_json(const ParameterSet& p);
ParameterSet parameters_from_json(const json& j);

json to_json(const FitResult& fit);
/// Restores enough of a FitResult for post-estimation analysis.
FitResult fit_from_json(const json& j);

GeneratorConfig generator_from_json(const json& j);

json to_json(const MarginalEffectTable& table);
json to_json(const ProbabilityCurve& curve);
json to_json(const std::vector<ScenarioResult>& scenarios);

json read_file(const std::string& path);

}  // namespace volatix::json_io
