#include "reflect/selection.hpp"

#include <algorithm>
#include <map>

namespace reflect {

void SelectionPolicy::validate() const {
  if (budget < 1) throw Error(ErrorCode::kSchemaError, "budget: must be >= 1", "config");
  if (max_per_type < 1) throw Error(ErrorCode::kSchemaError, "max_per_type: must be >= 1", "config");
}

bool selection_before(const ReflectionQuestion& a, const ReflectionQuestion& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.qtype != b.qtype) return a.qtype < b.qtype;
  if (a.template_id != b.template_id) return a.template_id < b.template_id;
  return a.text < b.text;
}

std::vector<ReflectionQuestion> select_questions(std::vector<ReflectionQuestion> candidates,
                                                 const SelectionPolicy& p) {
  p.validate();
  std::stable_sort(candidates.begin(), candidates.end(), selection_before);

  std::vector<ReflectionQuestion> capped;
  std::map<QuestionTypeId, int> per_type;
  for (auto& q : candidates) {
    if (per_type[q.qtype]++ < p.max_per_type) capped.push_back(std::move(q));
  }

  const auto budget = static_cast<std::size_t>(p.budget);
  if (capped.size() <= budget) return capped;
  std::vector<ReflectionQuestion> out(capped.begin(), capped.begin() + static_cast<long>(budget));
  if (!p.require_creating) return out;

  const auto creating = [](const ReflectionQuestion& q) { return is_creating_level(q.qtype); };
  if (std::any_of(out.begin(), out.end(), creating)) return out;
  const auto first = std::find_if(capped.begin() + static_cast<long>(budget), capped.end(), creating);
  if (first != capped.end()) out.back() = *first;
  return out;
}

}  // namespace reflect
