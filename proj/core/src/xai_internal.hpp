#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reflect/model.hpp"

namespace reflect::detail {

// Encodes every background row, raising kIncompleteBackground on the first gap.
std::vector<Row> encode_background(const TabularModel& model,
                                   const std::vector<CaseInstance>& background,
                                   const std::string& stage);

std::size_t resolve_label(const TabularModel& model, const Row& x,
                          const std::optional<std::string>& target, const std::string& stage);

}  // namespace reflect::detail
