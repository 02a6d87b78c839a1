#include "cbrl/policy.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace cbrl {

namespace {

constexpr double kPi = std::numbers::pi;

Task decision_task_from_dim(const PartitionDecision& d, TemplateId id) {
  (void)d;
  return template_task(id);
}

void require_state(const Vector& x, Task task) {
  if (x.size() != state_dim(task)) {
    std::ostringstream ss;
    ss << "state has dimension " << x.size() << ", task expects " << state_dim(task);
    throw DimensionError(ss.str());
  }
  if (!x.allFinite()) throw InputError("state contains a non-finite entry");
}

// Energy-rule target rate at angle theta: s * sqrt(d0 (1 - cos theta)).
double energy_rate(double d0, double theta) {
  const double radicand = std::max(d0, 0.0) * (1.0 - std::cos(theta));
  return std::sqrt(std::max(radicand, 0.0));
}

}  // namespace

int state_dim(Task task) {
  switch (task) {
    case Task::CartPole: return 4;
    case Task::MountainCar: return 2;
    case Task::Pendulum: return 2;
  }
  throw InputError("unknown task");
}

int control_dim(Task) { return 1; }

int partition_count(Task task) {
  switch (task) {
    case Task::CartPole: return 1;
    case Task::MountainCar: return 2;
    case Task::Pendulum: return 4;
  }
  throw InputError("unknown task");
}

double wrap_angle(double theta) {
  double w = std::remainder(theta, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

int template_dim(TemplateId id, int group1, int group2) {
  switch (id) {
    case TemplateId::CartPole: return 10;
    case TemplateId::MountainCar: return 4;
    case TemplateId::Pendulum: return 5;
    case TemplateId::GenericTwoGroup: {
      if (group1 < 1 || group2 < 1) throw InputError("group lengths must be >= 1");
      return 2 * (group1 + group2) + 2;
    }
  }
  throw InputError("unknown template");
}

int template_state_dim(TemplateId id, int group1, int group2) {
  switch (id) {
    case TemplateId::CartPole: return 4;
    case TemplateId::MountainCar: return 2;
    case TemplateId::Pendulum: return 2;
    case TemplateId::GenericTwoGroup: return group1 + group2;
  }
  throw InputError("unknown template");
}

Task template_task(TemplateId id) {
  switch (id) {
    case TemplateId::CartPole: return Task::CartPole;
    case TemplateId::MountainCar: return Task::MountainCar;
    case TemplateId::Pendulum: return Task::Pendulum;
    case TemplateId::GenericTwoGroup:
      throw InputError("GenericTwoGroup is not bound to a task");
  }
  throw InputError("unknown template");
}

void VariableVector::validate() const {
  const int want = template_dim(template_id, group1, group2);
  if (dim() != want) {
    std::ostringstream ss;
    ss << "variable vector has " << dim() << " entries, template expects " << want;
    throw InputError(ss.str());
  }
  if (!values.allFinite()) throw InputError("variable vector contains a non-finite entry");
}

TaskCost default_task_cost(Task task) {
  TaskCost c;
  c.qbar_diag = Vector::Ones(state_dim(task));
  c.rho = 0.1;
  return c;
}

PartitionDecision select_partition(Task task, const Vector& x,
                                   const VariableVector& v) {
  require_state(x, task);
  PartitionDecision d;
  switch (task) {
    case Task::CartPole: {
      d.partition_id = 1;
      d.target = Vector::Zero(4);
      return d;
    }
    case Task::MountainCar: {
      if (x(1) < 0.0) {
        d.partition_id = 1;
        d.target = (Vector(2) << -1.2, 0.0).finished();
      } else {
        d.partition_id = 2;
        d.target = (Vector(2) << 0.6, 0.0).finished();
      }
      return d;
    }
    case Task::Pendulum: {
      if (v.template_id != TemplateId::Pendulum) {
        throw InputError("Pendulum partition selection needs a Pendulum variable vector");
      }
      v.validate();
      const double theta = wrap_angle(x(0));
      const double theta_dot = x(1);
      const int rotation = (theta_dot >= 0.0) ? 1 : -1;
      double boundary;      // canonical target angle
      double rate_sign;     // sign of the target rate
      if (std::abs(theta) <= kPi / 4.0) {
        d.partition_id = 1;
        boundary = 0.0;
        rate_sign = 0.0;
      } else if (theta > kPi / 4.0 && theta <= 3.0 * kPi / 4.0) {
        d.partition_id = 2;
        boundary = kPi / 4.0;
        rate_sign = -1.0;  // toward upright
      } else if (theta < -kPi / 4.0 && theta >= -3.0 * kPi / 4.0) {
        d.partition_id = 4;
        boundary = -kPi / 4.0;
        rate_sign = 1.0;
      } else {
        d.partition_id = 3;
        // Boundary ahead in the direction of rotation.
        boundary = (rotation > 0) ? -3.0 * kPi / 4.0 : 3.0 * kPi / 4.0;
        rate_sign = static_cast<double>(rotation);
      }
      // Report the target angle on the same branch as x(0) so the tracking
      // error never straddles the wrap.
      const double target_angle = x(0) + wrap_angle(boundary - x(0));
      const double target_rate = rate_sign * energy_rate(v.values(4), theta);
      d.target = (Vector(2) << target_angle, target_rate).finished();
      return d;
    }
  }
  throw InputError("unknown task");
}

LqrSpec build_dynamics(const VariableVector& v, const PartitionDecision& decision,
                       const TaskCost& cost) {
  v.validate();
  LqrSpec spec;
  const int n = template_state_dim(v.template_id, v.group1, v.group2);
  if (decision.target.size() != n) {
    throw InputError("partition decision target does not match the template state dimension");
  }
  if (cost.qbar_diag.size() != n) {
    throw InputError("cost diagonal does not match the template state dimension");
  }
  if (!(cost.rho > 0.0)) throw InputError("control cost rho must be positive");

  const Vector& w = v.values;
  spec.a = Matrix::Zero(n, n);
  spec.b = Matrix::Zero(n, 1);
  spec.feedforward = Vector::Zero(1);
  spec.target = decision.target;

  switch (v.template_id) {
    case TemplateId::CartPole: {
      if (decision.partition_id != 1) throw InputError("CartPole has a single partition");
      spec.a(0, 1) = 1.0;
      spec.a.row(1) = w.segment(0, 4).transpose();
      spec.a(2, 3) = 1.0;
      spec.a.row(3) = w.segment(4, 4).transpose();
      spec.b(1, 0) = w(8);
      spec.b(3, 0) = w(9);
      break;
    }
    case TemplateId::MountainCar: {
      if (decision.partition_id < 1 || decision.partition_id > 2) {
        throw InputError("MountainCar has partitions 1 and 2");
      }
      const double p_star = decision.target(0);
      spec.a(0, 1) = 1.0;
      spec.a(1, 0) = w(0) * std::sin(3.0 * p_star);
      spec.a(1, 1) = w(1);
      spec.b(1, 0) = w(2);
      spec.feedforward(0) = w(3) * std::cos(3.0 * p_star);
      break;
    }
    case TemplateId::Pendulum: {
      if (decision.partition_id < 1 || decision.partition_id > 4) {
        throw InputError("Pendulum has partitions 1..4");
      }
      const double theta_star = decision.target(0);
      spec.a(0, 1) = 1.0;
      spec.a(1, 0) = w(0) * std::cos(theta_star);
      spec.a(1, 1) = w(1);
      spec.b(1, 0) = w(2);
      spec.feedforward(0) = -w(3) * std::sin(theta_star);
      break;
    }
    case TemplateId::GenericTwoGroup: {
      // Two integrator chains; the last row of each chain is free and the
      // control enters only there.
      const int k1 = v.group1;
      for (int i = 0; i + 1 < k1; ++i) spec.a(i, i + 1) = 1.0;
      for (int i = k1; i + 1 < n; ++i) spec.a(i, i + 1) = 1.0;
      spec.a.row(k1 - 1) = w.segment(0, n).transpose();
      spec.a.row(n - 1) = w.segment(n, n).transpose();
      spec.b(k1 - 1, 0) = w(2 * n);
      spec.b(n - 1, 0) = w(2 * n + 1);
      break;
    }
  }

  spec.qbar = cost.qbar_diag.asDiagonal();
  spec.r = Matrix::Constant(1, 1, cost.rho);
  return spec;
}

Vector lqr_action(const LqrSpec& spec, const CareSolution& sol, const Vector& x) {
  if (x.size() != spec.a.rows() || sol.k.cols() != spec.a.rows()) {
    throw DimensionError("lqr_action: state/gain dimensions mismatch");
  }
  return -sol.k * (x - spec.target) + spec.feedforward;
}

double map_action(const Vector& u, Task task) {
  if (u.size() != 1 || !u.allFinite()) throw InputError("control must be a finite scalar");
  switch (task) {
    case Task::CartPole: return u(0) >= 0.0 ? 1.0 : 0.0;
    case Task::MountainCar: return std::clamp(u(0), -1.0, 1.0);
    case Task::Pendulum: return std::clamp(u(0), -2.0, 2.0);
  }
  throw InputError("unknown task");
}

std::vector<SlotDerivative> template_slot_derivatives(const VariableVector& v,
                                                      const PartitionDecision& decision) {
  v.validate();
  const int n = template_state_dim(v.template_id, v.group1, v.group2);
  const int d = v.dim();
  std::vector<SlotDerivative> out(static_cast<std::size_t>(d));
  for (auto& s : out) {
    s.da = Matrix::Zero(n, n);
    s.db = Matrix::Zero(n, 1);
    s.dff = Vector::Zero(1);
  }
  switch (v.template_id) {
    case TemplateId::CartPole: {
      for (int j = 0; j < 4; ++j) out[j].da(1, j) = 1.0;
      for (int j = 0; j < 4; ++j) out[4 + j].da(3, j) = 1.0;
      out[8].db(1, 0) = 1.0;
      out[9].db(3, 0) = 1.0;
      break;
    }
    case TemplateId::MountainCar: {
      const double p_star = decision.target(0);
      out[0].da(1, 0) = std::sin(3.0 * p_star);
      out[1].da(1, 1) = 1.0;
      out[2].db(1, 0) = 1.0;
      out[3].dff(0) = std::cos(3.0 * p_star);
      break;
    }
    case TemplateId::Pendulum: {
      const double theta_star = decision.target(0);
      out[0].da(1, 0) = std::cos(theta_star);
      out[1].da(1, 1) = 1.0;
      out[2].db(1, 0) = 1.0;
      out[3].dff(0) = -std::sin(theta_star);
      // slot 4 (d0) only moves the target rate; see target_slot_derivative.
      break;
    }
    case TemplateId::GenericTwoGroup: {
      const int k1 = v.group1;
      for (int j = 0; j < n; ++j) out[j].da(k1 - 1, j) = 1.0;
      for (int j = 0; j < n; ++j) out[n + j].da(n - 1, j) = 1.0;
      out[2 * n].db(k1 - 1, 0) = 1.0;
      out[2 * n + 1].db(n - 1, 0) = 1.0;
      break;
    }
  }
  return out;
}

Vector target_slot_derivative(const VariableVector& v,
                              const PartitionDecision& decision, int slot) {
  const int n = template_state_dim(v.template_id, v.group1, v.group2);
  Vector dt = Vector::Zero(n);
  if (v.template_id == TemplateId::Pendulum && slot == 4) {
    const double d0 = v.values(4);
    const double rate = decision.target(1);
    if (d0 > 0.0 && rate != 0.0) dt(1) = rate / (2.0 * d0);
  }
  return dt;
}

PolicyDerivatives compute_policy_derivatives(const VariableVector& v,
                                             const PartitionDecision& decision,
                                             const TaskCost& cost) {
  PolicyDerivatives pd;
  pd.spec = build_dynamics(v, decision, cost);
  const CareProblem prob{pd.spec.a, pd.spec.b, pd.spec.qbar, pd.spec.r};
  pd.sol = solve_care(prob);

  const auto slots = template_slot_derivatives(v, decision);
  const Matrix dq = Matrix::Zero(pd.spec.a.rows(), pd.spec.a.cols());
  const Matrix dr = Matrix::Zero(1, 1);
  // All slots share the closed-loop Lyapunov operator; factor it once.
  const Matrix acl = pd.spec.a - pd.spec.b * pd.sol.k;
  LyapunovOperator lyap(acl);
  pd.dk.reserve(slots.size());
  pd.dff.reserve(slots.size());
  for (const auto& s : slots) {
    const Matrix z = pd.sol.p * (s.da - s.db * pd.sol.k);
    Matrix dp = lyap.solve((z + z.transpose() + dq +
                            pd.sol.k.transpose() * dr * pd.sol.k)
                               .eval());
    dp = 0.5 * (dp + dp.transpose()).eval();
    const Matrix dk = pd.spec.r.llt().solve(
        s.db.transpose() * pd.sol.p + pd.spec.b.transpose() * dp - dr * pd.sol.k);
    pd.dk.push_back(dk);
    pd.dff.push_back(s.dff);
  }
  return pd;
}

Matrix jacobian_columns(const PolicyDerivatives& pd, const VariableVector& v,
                        const PartitionDecision& decision, const Vector& x) {
  const int d = v.dim();
  const int m = static_cast<int>(pd.sol.k.rows());
  if (x.size() != pd.spec.a.rows()) {
    throw DimensionError("jacobian_columns: state dimension mismatch");
  }
  const Vector err = x - decision.target;
  Matrix jac(m, d);
  for (int j = 0; j < d; ++j) {
    Vector col = -pd.dk[static_cast<std::size_t>(j)] * err +
                 pd.dff[static_cast<std::size_t>(j)];
    const Vector dt = target_slot_derivative(v, decision, j);
    if (dt.any()) col += pd.sol.k * dt;
    jac.col(j) = col;
  }
  return jac;
}

Matrix policy_variable_jacobian(const VariableVector& v,
                                const PartitionDecision& decision,
                                const Vector& x, const TaskCost& cost) {
  const PolicyDerivatives pd = compute_policy_derivatives(v, decision, cost);
  return jacobian_columns(pd, v, decision, x);
}

}  // namespace cbrl
