#pragma once

#include <map>
#include <string>
#include <vector>

#include "aki/events.hpp"

namespace aki {

// Diagnosis-code prefix -> comorbidity flag. The validated mappings live in
// external terminologies; this file format accepts any prefix set.
struct ComorbidityRules {
    std::vector<std::pair<std::string, std::string>> prefix_to_flag;
    std::vector<std::string> flag_names;  // file order, deduplicated

    std::map<std::string, bool> evaluate(const std::vector<const ClinicalEvent*>& events) const;
};

struct CharlsonWeights {
    std::map<std::string, int> weight_by_flag;

    int index(const std::map<std::string, bool>& flags) const;
};

// Drug code -> medication class (one class per line; a drug may map to
// several classes over multiple lines).
struct MedicationClassRules {
    std::vector<std::pair<std::string, std::string>> code_to_class;
    std::vector<std::string> class_names;  // file order, deduplicated

    std::map<std::string, bool> evaluate(const std::vector<const ClinicalEvent*>& med_events) const;
};

ComorbidityRules load_comorbidity_rules(const std::string& path);
CharlsonWeights load_charlson_weights(const std::string& path);
MedicationClassRules load_medication_classes(const std::string& path);

}  // namespace aki
