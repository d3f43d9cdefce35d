#pragma once

#include <cstddef>
#include <vector>

namespace causalad::discovery {

/// Calls fn(subset) for every size-k subset of items in lexicographic index order.
/// Stops early when fn returns true; returns whether it did.
template <typename Fn>
bool for_each_subset(const std::vector<std::size_t>& items, std::size_t k, Fn&& fn) {
    if (k > items.size()) return false;
    std::vector<std::size_t> pos(k);
    for (std::size_t i = 0; i < k; ++i) pos[i] = i;
    std::vector<std::size_t> subset(k);
    while (true) {
        for (std::size_t i = 0; i < k; ++i) subset[i] = items[pos[i]];
        if (fn(subset)) return true;
        std::size_t i = k;
        while (i > 0 && pos[i - 1] == items.size() - k + (i - 1)) --i;
        if (i == 0) return false;
        ++pos[i - 1];
        for (std::size_t j = i; j < k; ++j) pos[j] = pos[j - 1] + 1;
    }
}

}  // namespace causalad::discovery
