#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cxrgan::data {

struct ClassLabel {
    int id = 0;
    std::string name;

    bool operator==(const ClassLabel&) const = default;
};

/// Ordered label set with dense ids 0..K-1 and unique names.
class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(const std::vector<std::string>& names);

    /// COVID-19, NORMAL, VIRAL_PNEUMONIA.
    static LabelSet chest_xray_default();

    int size() const noexcept { return static_cast<int>(labels_.size()); }
    bool empty() const noexcept { return labels_.empty(); }
    const ClassLabel& operator[](int id) const;
    const std::vector<ClassLabel>& labels() const noexcept { return labels_; }
    std::vector<std::string> names() const;
    std::optional<int> find(std::string_view name) const;
    /// Throws ConfigError when `name` is not registered.
    int id_of(std::string_view name) const;
    bool contains(int id) const noexcept { return id >= 0 && id < size(); }

    bool operator==(const LabelSet&) const = default;

private:
    std::vector<ClassLabel> labels_;
};

}  // namespace cxrgan::data
