#include "aki/rules.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace aki {

namespace {

std::vector<std::pair<std::string, std::string>> load_two_column(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open rule file: " + path);
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto pos = line.find('\t');
        if (pos == std::string::npos)
            throw std::runtime_error("rule file " + path + ": expected two tab-separated fields");
        rows.emplace_back(line.substr(0, pos), line.substr(pos + 1));
    }
    return rows;
}

std::vector<std::string> unique_in_order(const std::vector<std::pair<std::string, std::string>>& rows) {
    std::vector<std::string> names;
    for (const auto& [key, value] : rows)
        if (std::find(names.begin(), names.end(), value) == names.end()) names.push_back(value);
    return names;
}

}  // namespace

std::map<std::string, bool> ComorbidityRules::evaluate(
    const std::vector<const ClinicalEvent*>& events) const {
    std::map<std::string, bool> flags;
    for (const auto& name : flag_names) flags[name] = false;
    for (const auto* e : events) {
        if (e->kind != EventKind::DIAGNOSIS) continue;
        for (const auto& [prefix, flag] : prefix_to_flag)
            if (e->code.rfind(prefix, 0) == 0) flags[flag] = true;
    }
    return flags;
}

int CharlsonWeights::index(const std::map<std::string, bool>& flags) const {
    int total = 0;
    for (const auto& [flag, present] : flags) {
        if (!present) continue;
        auto it = weight_by_flag.find(flag);
        if (it != weight_by_flag.end()) total += it->second;
    }
    return total;
}

std::map<std::string, bool> MedicationClassRules::evaluate(
    const std::vector<const ClinicalEvent*>& med_events) const {
    std::map<std::string, bool> flags;
    for (const auto& name : class_names) flags[name] = false;
    for (const auto* e : med_events) {
        if (e->kind != EventKind::MEDICATION) continue;
        for (const auto& [code, cls] : code_to_class)
            if (e->code == code) flags[cls] = true;
    }
    return flags;
}

ComorbidityRules load_comorbidity_rules(const std::string& path) {
    ComorbidityRules rules;
    rules.prefix_to_flag = load_two_column(path);
    rules.flag_names = unique_in_order(rules.prefix_to_flag);
    return rules;
}

CharlsonWeights load_charlson_weights(const std::string& path) {
    CharlsonWeights weights;
    for (const auto& [flag, value] : load_two_column(path)) {
        try {
            weights.weight_by_flag[flag] = std::stoi(value);
        } catch (const std::exception&) {
            throw std::runtime_error("charlson weights " + path + ": bad weight for " + flag);
        }
    }
    return weights;
}

MedicationClassRules load_medication_classes(const std::string& path) {
    MedicationClassRules rules;
    rules.code_to_class = load_two_column(path);
    rules.class_names = unique_in_order(rules.code_to_class);
    return rules;
}

}  // namespace aki
