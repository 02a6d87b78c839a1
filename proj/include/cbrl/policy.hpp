#pragma once

#include <vector>

#include "cbrl/linalg.hpp"

namespace cbrl {

enum class Task { CartPole, MountainCar, Pendulum };

enum class TemplateId { CartPole, MountainCar, Pendulum, GenericTwoGroup };

int state_dim(Task task);     // 4 / 2 / 2
int control_dim(Task task);   // 1 for all tasks
int partition_count(Task task);  // 1 / 2 / 4

// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

// The unknown independent variables of a dynamics template. Entries are
// placed into structured (A, B, feedforward) forms by build_dynamics.
struct VariableVector {
  TemplateId template_id = TemplateId::CartPole;
  Vector values;
  // Chain lengths for GenericTwoGroup (two integrator chains whose last rows
  // are free); ignored by the task templates.
  int group1 = 2;
  int group2 = 2;

  int dim() const { return static_cast<int>(values.size()); }
  void validate() const;  // length matches template, entries finite
};

int template_dim(TemplateId id, int group1 = 2, int group2 = 2);
int template_state_dim(TemplateId id, int group1 = 2, int group2 = 2);
Task template_task(TemplateId id);  // InputError for GenericTwoGroup

// Diagonal state-cost and scalar control-cost weights.
struct TaskCost {
  Vector qbar_diag;
  double rho = 0.1;
};
TaskCost default_task_cost(Task task);  // qbar = ones, rho = 0.1

// Which local LQR applies at a state: region id, resolved target, and the
// trigonometric factors the template needs at that target.
struct PartitionDecision {
  int partition_id = 1;  // 1-based, within partition_count(task)
  Vector target;
};

// Routes a state to its partition and resolves the target.
//   CartPole     single partition, target at the origin.
//   MountainCar  partition 1 (target [-1.2, 0]) iff velocity < 0, else
//                partition 2 (target [0.6, 0]).
//   Pendulum     four angular regions split at +-pi/4 and +-3pi/4:
//                1 upright (|th| <= pi/4, target 0), 2 right side
//                (target pi/4), 4 left side (target -pi/4), 3 bottom
//                (target the +-3pi/4 boundary ahead in the direction of
//                rotation, th_dot = 0 counted as positive rotation).
//                The target rate comes from the energy rule
//                sqrt(d0 (1 - cos th)); side regions aim it toward upright,
//                the bottom region keeps the current rotation direction.
//                The target angle is reported on the same branch as x[0] so
//                that x - target never straddles the wrap.
PartitionDecision select_partition(Task task, const Vector& x,
                                   const VariableVector& v);

// One LQR problem instance produced by a template.
struct LqrSpec {
  Matrix a;
  Matrix b;
  Matrix qbar;
  Matrix r;
  Vector target;
  Vector feedforward;  // constant control offset added after the feedback term
};

// Places v's entries into the template's (A, B, feedforward) structure at the
// decision's target. Qbar and R come from the cost config.
LqrSpec build_dynamics(const VariableVector& v, const PartitionDecision& decision,
                       const TaskCost& cost);

// u = -K (x - target) + feedforward.
Vector lqr_action(const LqrSpec& spec, const CareSolution& sol, const Vector& x);

// LQR output -> environment action: CartPole thresholds at 0 (ties push
// right), MountainCar clips to [-1, 1], Pendulum clips to [-2, 2].
double map_action(const Vector& u, Task task);

// Per-variable perturbations of the template structure at a fixed decision.
struct SlotDerivative {
  Matrix da;
  Matrix db;
  Vector dff;
};
std::vector<SlotDerivative> template_slot_derivatives(const VariableVector& v,
                                                      const PartitionDecision& decision);

// d target / d v_j at the decision (nonzero only for the Pendulum energy-rule
// slot d0, where d th_dot* / d d0 = th_dot* / (2 d0)).
Vector target_slot_derivative(const VariableVector& v,
                              const PartitionDecision& decision, int slot);

// CARE solution plus the per-slot gain derivatives for one template decision.
// Everything here depends only on (v, target angle), so it can be reused
// across the steps of an episode.
struct PolicyDerivatives {
  LqrSpec spec;
  CareSolution sol;
  std::vector<Matrix> dk;   // d gain / d v_j
  std::vector<Vector> dff;  // d feedforward / d v_j
};
PolicyDerivatives compute_policy_derivatives(const VariableVector& v,
                                             const PartitionDecision& decision,
                                             const TaskCost& cost);

// d u / d v as an m x d matrix at state x:
//   column j = -dK_j (x - x*) + d ff_j + K d x*/d v_j.
Matrix jacobian_columns(const PolicyDerivatives& pd, const VariableVector& v,
                        const PartitionDecision& decision, const Vector& x);

// One-shot convenience: build, solve, differentiate.
Matrix policy_variable_jacobian(const VariableVector& v,
                                const PartitionDecision& decision,
                                const Vector& x, const TaskCost& cost);

}  // namespace cbrl
