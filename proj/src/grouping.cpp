#include "dside/grouping.hpp"

#include <algorithm>
#include <set>

#include "dside/errors.hpp"

namespace dside {

ClassGrouping ClassGrouping::identity(const std::vector<std::string>& classes, std::string name) {
    ClassGrouping g;
    g.name = std::move(name);
    for (const auto& c : classes) g.mapping.emplace(c, c);
    return g;
}

std::optional<std::string> ClassGrouping::target(const std::string& original) const {
    auto it = mapping.find(original);
    if (it == mapping.end())
        throw InputError("grouping '" + name + "' does not map class '" + original + "'");
    return it->second;
}

std::vector<std::string> ClassGrouping::grouped_classes() const {
    std::set<std::string> out;
    for (const auto& [from, to] : mapping)
        if (to) out.insert(*to);
    return {out.begin(), out.end()};
}

void ClassGrouping::validate_against(const std::vector<std::string>& classes) const {
    std::set<std::string> known(classes.begin(), classes.end());
    for (const auto& [from, to] : mapping) {
        if (!known.count(from))
            throw InputError("grouping '" + name + "' references unknown class '" + from + "'");
        if (to && to->empty())
            throw InputError("grouping '" + name + "' maps '" + from + "' to an empty id");
    }
    for (const auto& c : known)
        if (!mapping.count(c))
            throw InputError("grouping '" + name + "' does not map class '" + c + "'");
    if (grouped_classes().size() < 2)
        throw InputError("grouping '" + name + "' leaves fewer than 2 classes");
}

}  // namespace dside
