#ifndef MIXSEL_SERIALIZE_HPP
#define MIXSEL_SERIALIZE_HPP

#include <json.hpp>

#include "mixsel/fitter.hpp"
#include "mixsel/mixture.hpp"
#include "mixsel/selector.hpp"
#include "mixsel/simulation.hpp"

namespace mixsel {

// JSON shapes match the documents under schemas/. Key order is alphabetical
// (nlohmann's default), which keeps equal values byte-identical when dumped.

nlohmann::json mixture_to_json(const MixtureParams& psi);
MixtureParams mixture_from_json(const nlohmann::json& j);

nlohmann::json criterion_to_json(const CriterionSpec& spec);
nlohmann::json fit_config_to_json(const FitConfig& cfg);
nlohmann::json fit_result_to_json(const FitResult& res);
nlohmann::json report_to_json(const SelectionReport& report);
nlohmann::json accuracy_table_to_json(const AccuracyTable& table);
nlohmann::json replicate_record_to_json(const ReplicateRecord& rec);

}  // namespace mixsel

#endif
