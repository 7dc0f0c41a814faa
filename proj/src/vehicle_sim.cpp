#include "holoarm/vehicle_sim.hpp"

#include <cmath>

#include <fmt/format.h>

namespace holoarm {

VehicleParams with_payload(const VehicleParams& vehicle, const Payload& payload) {
  require(payload.mass >= 0.0, "payload mass must be >= 0");
  if (payload.mass == 0.0) return vehicle;
  VehicleParams out = vehicle;
  const double total = vehicle.mass + payload.mass;
  const Vec3 shift = payload.mass / total * payload.offset;
  const Vec3 rel = payload.offset - shift;
  out.mass = total;
  for (auto& r : out.rotor_positions) r -= shift;
  // Diagonal part of the parallel-axis terms.
  auto axis_sq = [](const Vec3& d) {
    return Vec3(d.y() * d.y() + d.z() * d.z(), d.x() * d.x() + d.z() * d.z(),
                d.x() * d.x() + d.y() * d.y());
  };
  out.inertia_diag += vehicle.mass * axis_sq(shift) + payload.mass * axis_sq(rel);
  return out;
}

void SimConfig::validate() const {
  vehicle.validate();
  arm.validate();
  contact.validate();
  require(dt > 0.0 && dt <= 0.01, "sim.dt must be in (0, 0.01]");
  for (const auto& p : pushes) {
    require(p.duration >= 0.0, "push duration must be >= 0");
    require(p.arm >= -1 && p.arm < kNumArms, "push arm index must be -1..3");
  }
}

VehicleSim::VehicleSim(SimConfig config, SimState initial)
    : config_(std::move(config)), state_(std::move(initial)) {
  config_.validate();
  reset(state_);
}

void VehicleSim::reset(const SimState& state) {
  require(std::abs(state.body.attitude.norm() - 1.0) < 1e-6, "sim: attitude must be a unit quaternion");
  check_finite(state.body, "sim reset");
  state_ = state;
  if (!config_.compliant) state_.arms = {};
}

namespace {

struct ExternalForce {
  int arm;
  Vec3 point;  // body frame
  Vec3 force;  // body frame
};

}  // namespace

VehicleSim::Derivative VehicleSim::evaluate(const Full& x, double t, ContactReport* report) const {
  const VehicleParams& vp = config_.vehicle;
  const ArmParams& ap = config_.arm;
  const bool compliant = config_.compliant;
  const Quat q = x.body.attitude.normalized();
  const Mat3 rot = q.toRotationMatrix();

  std::array<ArmFrame, kNumArms> frames;
  for (int i = 0; i < kNumArms; ++i) frames[i] = arm_frame(i, x.arms[i], vp, ap);

  Wrench wrench = body_wrench(state_.motors, x.arms, vp, ap);

  std::vector<ExternalForce> ext;
  auto body_point = [&](int arm, const Vec3& offset) -> Vec3 {
    if (arm < 0) return offset;
    return arm_point(frames[arm], vp.rotor_positions[arm], x.arms[arm].s_ax, offset);
  };

  const Environment& env = config_.environment;
  if (env.ground_z || !env.walls.empty()) {
    const auto& pts = config_.contact.points;
    std::vector<Primitive> prims(pts.size());
    for (size_t k = 0; k < pts.size(); ++k) {
      const ContactPoint& cp = pts[k];
      const Vec3 c = body_point(cp.arm, cp.offset);
      Vec3 axis = Vec3::UnitZ();
      Vec3 rel_v = Vec3::Zero();
      Vec3 rel_w = Vec3::Zero();
      if (cp.arm >= 0) {
        const ArmFrame& f = frames[cp.arm];
        axis = f.bend * Vec3::UnitZ();
        if (compliant) {
          rel_v = arm_point_velocity(f, x.arms[cp.arm], c);
          rel_w = x.arms[cp.arm].rate_lat * f.lateral_axis + x.arms[cp.arm].rate_vert * f.vertical_axis;
        }
      }
      Primitive& p = prims[k];
      p.center = x.body.position + rot * c;
      p.axis = rot * axis;
      p.radius = cp.guard_radius;
      p.half_height = cp.half_height;
      p.velocity = x.body.velocity + rot * (x.body.angular_velocity.cross(c) + rel_v);
      p.angular_velocity = rot * (x.body.angular_velocity + rel_w);
    }
    for (const PointForce& pf : environment_contact(prims, env, config_.contact)) {
      ext.push_back({pts[pf.primitive].arm, rot.transpose() * (pf.point - x.body.position),
                     rot.transpose() * pf.force});
      if (report) {
        (pf.ground ? report->ground_normal : report->wall_normal) += pf.normal;
        report->world_force += pf.force;
        ++report->touching;
      }
    }
  }

  for (const Push& p : config_.pushes) {
    if (t >= p.start && t < p.start + p.duration) ext.push_back({p.arm, body_point(p.arm, p.offset), p.force});
  }

  std::array<ArmLoad, kNumArms> loads{};
  std::array<Vec3, kNumArms> arm_force;
  std::array<Vec3, kNumArms> arm_moment;
  arm_force.fill(Vec3::Zero());
  arm_moment.fill(Vec3::Zero());
  for (const ExternalForce& e : ext) {
    if (!compliant || e.arm < 0) {
      wrench.force += e.force;
      wrench.torque += e.point.cross(e.force);
      continue;
    }
    const ArmFrame& f = frames[e.arm];
    const Vec3 moment = (e.point - f.pivot).cross(e.force);
    loads[e.arm].torque_lat += moment.dot(f.lateral_axis);
    loads[e.arm].torque_vert += moment.dot(f.vertical_axis);
    loads[e.arm].force_axial += e.force.dot(f.axial_inward);
    arm_force[e.arm] += e.force;
    arm_moment[e.arm] += moment;
  }

  Derivative d;
  for (int i = 0; i < kNumArms; ++i) {
    if (!compliant) {
      d.arms[i] = ArmDerivative{0, 0, 0, 0, 0, 0};
      continue;
    }
    const ArmFrame& f = frames[i];
    d.arms[i] = arm_derivative(x.arms[i], loads[i], ap);
    // Bending inertia is a tip mass I/L^2 at the hub on a rigid rod. The
    // part of each bending moment not carried by the joint accelerates that
    // mass; the rest of the load reaches the body at the pivot.
    const JointReaction jr = joint_reaction(x.arms[i], loads[i], ap);
    const Vec3 rod = -f.axial_inward;
    const Vec3 t_lat = f.lateral_axis.cross(rod);
    const Vec3 t_vert = f.vertical_axis.cross(rod);
    const Vec3 force = arm_force[i] - ((loads[i].torque_lat - jr.torque_lat) / ap.arm_length) * t_lat -
                       ((loads[i].torque_vert - jr.torque_vert) / ap.arm_length) * t_vert -
                       (loads[i].force_axial - jr.force_axial) * f.axial_inward;
    wrench.force += force;
    wrench.torque += f.pivot.cross(force) + jr.torque_lat * f.lateral_axis +
                     jr.torque_vert * f.vertical_axis + arm_moment[i].dot(f.twist_axis) * f.twist_axis;
  }

  d.body = body_derivative(x.body, wrench, Vec3::Zero(), vp);
  return d;
}

VehicleSim::Full VehicleSim::advance(const Full& x, const Derivative& d, double h) const {
  Full o;
  const RigidBodyState& s = x.body;
  o.body.position = s.position + h * d.body.position_dot;
  o.body.attitude = Quat(s.attitude.w() + h * d.body.attitude_dot[0], s.attitude.x() + h * d.body.attitude_dot[1],
                         s.attitude.y() + h * d.body.attitude_dot[2], s.attitude.z() + h * d.body.attitude_dot[3]);
  o.body.velocity = s.velocity + h * d.body.velocity_dot;
  o.body.angular_velocity = s.angular_velocity + h * d.body.angular_velocity_dot;
  for (int i = 0; i < kNumArms; ++i) {
    const ArmState& a = x.arms[i];
    const ArmDerivative& da = d.arms[i];
    o.arms[i] = ArmState{a.beta_lat + h * da.rate_lat, a.beta_vert + h * da.rate_vert, a.s_ax + h * da.rate_ax,
                         a.rate_lat + h * da.acc_lat,  a.rate_vert + h * da.acc_vert,  a.rate_ax + h * da.acc_ax};
  }
  return o;
}

void VehicleSim::step(const MotorArray& commands) {
  const double dt = config_.dt;
  state_.motors = motor_lag_step(state_.motors, commands, dt, config_.vehicle);

  const Full x{state_.body, state_.arms};
  const double t = state_.time;
  const Derivative k1 = evaluate(x, t, nullptr);
  const Derivative k2 = evaluate(advance(x, k1, 0.5 * dt), t + 0.5 * dt, nullptr);
  const Derivative k3 = evaluate(advance(x, k2, 0.5 * dt), t + 0.5 * dt, nullptr);
  const Derivative k4 = evaluate(advance(x, k3, dt), t + dt, nullptr);

  Derivative sum;
  sum.body.position_dot = k1.body.position_dot + 2.0 * (k2.body.position_dot + k3.body.position_dot) + k4.body.position_dot;
  sum.body.attitude_dot = k1.body.attitude_dot + 2.0 * (k2.body.attitude_dot + k3.body.attitude_dot) + k4.body.attitude_dot;
  sum.body.velocity_dot = k1.body.velocity_dot + 2.0 * (k2.body.velocity_dot + k3.body.velocity_dot) + k4.body.velocity_dot;
  sum.body.angular_velocity_dot = k1.body.angular_velocity_dot +
                                  2.0 * (k2.body.angular_velocity_dot + k3.body.angular_velocity_dot) +
                                  k4.body.angular_velocity_dot;
  for (int i = 0; i < kNumArms; ++i) {
    const ArmDerivative &a = k1.arms[i], &b = k2.arms[i], &c = k3.arms[i], &e = k4.arms[i];
    sum.arms[i] = ArmDerivative{a.rate_lat + 2.0 * (b.rate_lat + c.rate_lat) + e.rate_lat,
                                a.rate_vert + 2.0 * (b.rate_vert + c.rate_vert) + e.rate_vert,
                                a.rate_ax + 2.0 * (b.rate_ax + c.rate_ax) + e.rate_ax,
                                a.acc_lat + 2.0 * (b.acc_lat + c.acc_lat) + e.acc_lat,
                                a.acc_vert + 2.0 * (b.acc_vert + c.acc_vert) + e.acc_vert,
                                a.acc_ax + 2.0 * (b.acc_ax + c.acc_ax) + e.acc_ax};
  }

  Full out = advance(x, sum, dt / 6.0);
  out.body.attitude.normalize();
  const std::string where = fmt::format("sim step at t={:.6g} s", t);
  check_finite(out.body, where.c_str());
  for (int i = 0; i < kNumArms; ++i) {
    if (config_.compliant) out.arms[i] = apply_hard_stops(out.arms[i], config_.arm);
    check_finite(out.arms[i], where.c_str());
  }
  state_.body = out.body;
  state_.arms = out.arms;
  state_.time = t + dt;
}

std::vector<Primitive> VehicleSim::primitives() const {
  std::vector<Primitive> prims;
  const Mat3 rot = state_.body.attitude.toRotationMatrix();
  for (const ContactPoint& cp : config_.contact.points) {
    Primitive p;
    Vec3 c = cp.offset;
    if (cp.arm >= 0) {
      const ArmFrame f = arm_frame(cp.arm, state_.arms[cp.arm], config_.vehicle, config_.arm);
      c = arm_point(f, config_.vehicle.rotor_positions[cp.arm], state_.arms[cp.arm].s_ax, cp.offset);
      p.axis = rot * (f.bend * Vec3::UnitZ());
    } else {
      p.axis = rot * Vec3::UnitZ();
    }
    p.center = state_.body.position + rot * c;
    p.radius = cp.guard_radius;
    p.half_height = cp.half_height;
    prims.push_back(p);
  }
  return prims;
}

ContactReport VehicleSim::contacts() const {
  ContactReport report;
  evaluate(Full{state_.body, state_.arms}, state_.time, &report);
  return report;
}

}  // namespace holoarm
