#include "ccdeq/design.hpp"

#include <algorithm>
#include <stdexcept>

namespace ccdeq {

std::string to_string(InterventionKind kind) {
  switch (kind) {
    case InterventionKind::Observational: return "observational";
    case InterventionKind::Abundance: return "abundance";
    case InterventionKind::Activity: return "activity";
    case InterventionKind::MechanismSet: return "mechanism_set";
  }
  throw std::logic_error("unknown intervention kind");
}

InterventionKind intervention_kind_from_string(const std::string& name) {
  if (name == "observational") return InterventionKind::Observational;
  if (name == "abundance") return InterventionKind::Abundance;
  if (name == "activity") return InterventionKind::Activity;
  if (name == "mechanism_set") return InterventionKind::MechanismSet;
  throw std::invalid_argument("unknown intervention kind: " + name);
}

Intervention Intervention::observational() { return {InterventionKind::Observational, {}}; }

Intervention Intervention::abundance(int target) { return {InterventionKind::Abundance, {target}}; }

Intervention Intervention::activity(int target) { return {InterventionKind::Activity, {target}}; }

Intervention Intervention::mechanism_set(std::vector<int> targets) {
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  return {InterventionKind::MechanismSet, std::move(targets)};
}

void Intervention::validate(int num_compounds) const {
  for (int t : targets) {
    if (t < 0 || t >= num_compounds) throw std::out_of_range("Intervention: target out of range");
  }
  switch (kind) {
    case InterventionKind::Observational:
      if (!targets.empty()) throw std::invalid_argument("observational condition must have no targets");
      break;
    case InterventionKind::Abundance:
    case InterventionKind::Activity:
      if (targets.size() != 1)
        throw std::invalid_argument(to_string(kind) + " intervention must have exactly one target");
      break;
    case InterventionKind::MechanismSet:
      if (targets.empty()) throw std::invalid_argument("mechanism_set intervention must have targets");
      break;
  }
}

std::vector<std::string> ExperimentDesign::validate(int num_compounds) const {
  if (conditions.empty()) throw std::invalid_argument("design must have at least one condition");
  if (!names.empty() && names.size() != conditions.size())
    throw std::invalid_argument("design names/conditions length mismatch");
  for (const auto& c : conditions) c.validate(num_compounds);
  std::vector<std::string> warnings;
  if (conditions.front().kind != InterventionKind::Observational) {
    warnings.push_back("first condition is not observational; it is still used as the baseline");
  }
  return warnings;
}

MechanismLabeling derive_mechanism_labels(const Graph& g, const ExperimentDesign& design) {
  const int d = g.num_compounds();
  const int k = design.num_conditions();
  design.validate(d);

  MechanismLabeling out;
  out.labels.setZero(d, k);
  out.counts.setZero(d);

  for (int i = 0; i < d; ++i) {
    int baseline_label = 0;  // assigned on first unchanged condition
    int next_label = 1;
    for (int c = 0; c < k; ++c) {
      const Intervention& iv = design.conditions[c];
      bool changed = false;
      switch (iv.kind) {
        case InterventionKind::Observational:
          break;
        case InterventionKind::Abundance:
          changed = iv.targets[0] == i;
          break;
        case InterventionKind::Activity:
          // activity on t changes the mechanisms of t's children
          changed = g.edge(iv.targets[0], i);
          break;
        case InterventionKind::MechanismSet:
          changed = std::binary_search(iv.targets.begin(), iv.targets.end(), i);
          break;
      }
      if (changed) {
        out.labels(i, c) = next_label++;
      } else {
        if (baseline_label == 0) baseline_label = next_label++;
        out.labels(i, c) = baseline_label;
      }
    }
    out.counts(i) = next_label - 1;
  }
  return out;
}

}  // namespace ccdeq
