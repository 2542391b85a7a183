#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dside {

/// Many-to-one remapping of original class ids. A mapped value of
/// std::nullopt drops the class.
struct ClassGrouping {
    std::string name;
    std::map<std::string, std::optional<std::string>> mapping;

    static ClassGrouping identity(const std::vector<std::string>& classes,
                                  std::string name = "identity");

    /// Grouped id for `original`, nullopt when dropped. Throws InputError
    /// for classes the grouping does not mention.
    std::optional<std::string> target(const std::string& original) const;

    /// Distinct grouped ids, sorted.
    std::vector<std::string> grouped_classes() const;

    /// Requires the mapping keys to equal `classes` exactly and at least
    /// two grouped classes to survive the drops.
    void validate_against(const std::vector<std::string>& classes) const;

    bool operator==(const ClassGrouping&) const = default;
};

}  // namespace dside
