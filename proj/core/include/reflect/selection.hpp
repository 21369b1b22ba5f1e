#pragma once

#include <vector>

#include "reflect/question_template.hpp"

namespace reflect {

struct SelectionPolicy {
  int budget = 5;
  int max_per_type = 2;
  bool require_creating = true;

  void validate() const;  // throws Error(kSchemaError)
};

// Total order used for selection: score descending, then question type, then
// template id, then text.
bool selection_before(const ReflectionQuestion& a, const ReflectionQuestion& b);

// Greedy pick in selection order honouring the per-type cap. With
// require_creating, the last slot is handed to the best Creating-level
// question when none made the cut. Raising the budget never drops a question
// selected under the lower budget.
std::vector<ReflectionQuestion> select_questions(std::vector<ReflectionQuestion> candidates,
                                                 const SelectionPolicy& p);

}  // namespace reflect
