#ifndef CCDEQ_DESIGN_HPP_
#define CCDEQ_DESIGN_HPP_

#include <string>
#include <vector>

#include <Eigen/Core>

#include "ccdeq/graph.hpp"

namespace ccdeq {

enum class InterventionKind { Observational, Abundance, Activity, MechanismSet };

std::string to_string(InterventionKind kind);
InterventionKind intervention_kind_from_string(const std::string& name);

/// One experimental perturbation. Observational has no targets, Abundance and
/// Activity force/alter a single compound, MechanismSet marks an arbitrary
/// nonempty set of compounds whose mechanisms change.
struct Intervention {
  InterventionKind kind = InterventionKind::Observational;
  std::vector<int> targets;  // sorted, unique

  static Intervention observational();
  static Intervention abundance(int target);
  static Intervention activity(int target);
  static Intervention mechanism_set(std::vector<int> targets);

  /// Throws std::invalid_argument / std::out_of_range on violated invariants.
  void validate(int num_compounds) const;
};

/// Ordered list of K experimental conditions with human-readable labels.
struct ExperimentDesign {
  std::vector<Intervention> conditions;
  std::vector<std::string> names;

  int num_conditions() const { return static_cast<int>(conditions.size()); }

  /// Hard errors throw; soft issues (first condition not observational) are
  /// returned as warning strings.
  std::vector<std::string> validate(int num_compounds) const;
};

/// Mechanism labels m(i, c) in {1, ..., counts(i)} identifying which version
/// of compound i's causal mechanism is active in condition c. Unchanged
/// conditions share the baseline mechanism; labels are assigned contiguously
/// in first-use order along each row.
struct MechanismLabeling {
  Eigen::MatrixXi labels;  // D x K
  Eigen::VectorXi counts;  // D, counts(i) = number of distinct labels in row i

  int num_compounds() const { return static_cast<int>(labels.rows()); }
  int num_conditions() const { return static_cast<int>(labels.cols()); }
};

/// Derives the labeling for a graph/design pair. Compound i's mechanism is
/// changed in condition c iff c is an Abundance intervention on i, an Activity
/// intervention on one of i's parents, or a MechanismSet containing i. Every
/// changing condition receives its own fresh label.
MechanismLabeling derive_mechanism_labels(const Graph& g, const ExperimentDesign& design);

}  // namespace ccdeq

#endif  // CCDEQ_DESIGN_HPP_
