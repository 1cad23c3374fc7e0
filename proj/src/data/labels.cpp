#include "cxrgan/data/labels.hpp"

#include <set>

#include "cxrgan/errors.hpp"

namespace cxrgan::data {

LabelSet::LabelSet(const std::vector<std::string>& names) {
    std::set<std::string> seen;
    for (const auto& name : names) {
        if (name.empty()) throw ConfigError("class names must be non-empty");
        if (!seen.insert(name).second) throw ConfigError("duplicate class name '" + name + "'");
        labels_.push_back({static_cast<int>(labels_.size()), name});
    }
}

LabelSet LabelSet::chest_xray_default() { return LabelSet({"COVID-19", "NORMAL", "VIRAL_PNEUMONIA"}); }

const ClassLabel& LabelSet::operator[](int id) const {
    if (!contains(id)) throw ConfigError("class id " + std::to_string(id) + " out of range");
    return labels_[static_cast<std::size_t>(id)];
}

std::vector<std::string> LabelSet::names() const {
    std::vector<std::string> out;
    out.reserve(labels_.size());
    for (const auto& l : labels_) out.push_back(l.name);
    return out;
}

std::optional<int> LabelSet::find(std::string_view name) const {
    for (const auto& l : labels_) {
        if (l.name == name) return l.id;
    }
    return std::nullopt;
}

int LabelSet::id_of(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw ConfigError("unknown class '" + std::string(name) + "'");
}

}  // namespace cxrgan::data
