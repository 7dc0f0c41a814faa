#include "holoarm/contact.hpp"

#include <algorithm>
#include <cmath>

namespace holoarm {

std::vector<ContactPoint> ContactParams::default_contact_points() {
  std::vector<ContactPoint> pts;
  for (double sx : {1.0, -1.0}) {
    for (double sy : {1.0, -1.0}) pts.push_back({Vec3(0.06 * sx, 0.06 * sy, -0.026), -1, 0.0, 0.0});
  }
  // Guard tips: the outboard-most rim point of each 87 mm guard, at its
  // bottom edge. Rotors 0,1 sit at +y and 2,3 at -y.
  for (int i = 0; i < kNumArms; ++i) {
    const double side = i < 2 ? 1.0 : -1.0;
    pts.push_back({Vec3(0.0, side * 0.087, -0.026), i, 0.0, 0.0});
  }
  return pts;
}

void ContactParams::validate() const {
  require(k_n > 0.0, "contact.k_n must be > 0");
  require(c_n >= 0.0, "contact.c_n must be >= 0");
  require(mu >= 0.0 && mu <= 2.0, "contact.mu must be in [0, 2]");
  require(c_t >= 0.0, "contact.c_t must be >= 0");
  require(failure_threshold > 0.0, "contact.failure_threshold must be > 0");
  for (const auto& p : points) {
    require(p.arm >= -1 && p.arm < kNumArms, "contact point arm index must be -1..3");
    require(p.guard_radius >= 0.0 && p.half_height >= 0.0, "contact guard dimensions must be >= 0");
  }
}

void GapGeometry::validate() const {
  require(width > 0.0, "scenario.gap_width must be > 0");
  require(thickness > 0.0, "gap thickness must be > 0");
  require(extent > 0.0, "gap extent must be > 0");
}

std::vector<WallBox> GapGeometry::walls() const {
  const double x0 = plane_x - 0.5 * thickness, x1 = plane_x + 0.5 * thickness;
  const double half = 0.5 * width;
  return {WallBox{Vec3(x0, half, -extent), Vec3(x1, half + extent, extent)},
          WallBox{Vec3(x0, -half - extent, -extent), Vec3(x1, -half, extent)}};
}

double contact_force(double penetration, double penetration_rate, const ContactParams& params) {
  if (std::isnan(penetration) || std::isnan(penetration_rate)) throw NumericalError("contact_force: non-finite input");
  require(penetration >= 0.0, "contact_force: penetration must be >= 0");
  return std::max(0.0, params.k_n * penetration + params.c_n * penetration_rate);
}

std::optional<Penetration> ground_penetration(const Primitive& prim, double ground_z) {
  Vec3 lowest = prim.center;
  if (prim.radius > 0.0) {
    const Vec3 down = -Vec3::UnitZ();
    const Vec3 radial = down - down.dot(prim.axis) * prim.axis;
    const double n = radial.norm();
    if (n > 1e-12) lowest += prim.radius * radial / n;
  }
  if (prim.half_height > 0.0) {
    lowest += (prim.axis.z() >= 0.0 ? -prim.half_height : prim.half_height) * prim.axis;
  }
  const double depth = ground_z - lowest.z();
  if (depth <= 0.0) return std::nullopt;
  return Penetration{depth, Vec3::UnitZ(), lowest};
}

// Walls are vertical: the primitive is tested as a vertical cylinder against
// the box footprint, gated by overlap in z.
std::optional<Penetration> box_penetration(const Primitive& prim, const WallBox& box) {
  const double az = std::abs(prim.axis.z());
  const double hz = prim.half_height * az + prim.radius * std::sqrt(std::max(0.0, 1.0 - az * az));
  if (prim.center.z() + hz < box.min.z() || prim.center.z() - hz > box.max.z()) return std::nullopt;

  const double cx = prim.center.x(), cy = prim.center.y();
  const double qx = std::clamp(cx, box.min.x(), box.max.x());
  const double qy = std::clamp(cy, box.min.y(), box.max.y());
  const double z = std::clamp(prim.center.z(), box.min.z(), box.max.z());
  const double dx = cx - qx, dy = cy - qy;
  const double dist = std::hypot(dx, dy);

  if (dist > 0.0) {
    if (dist >= prim.radius) return std::nullopt;
    const Vec3 n(dx / dist, dy / dist, 0.0);
    return Penetration{prim.radius - dist, n, Vec3(cx, cy, z) - prim.radius * n};
  }
  // Centre inside the footprint: push out through the nearest side face.
  const double faces[4] = {cx - box.min.x(), box.max.x() - cx, cy - box.min.y(), box.max.y() - cy};
  const Vec3 normals[4] = {-Vec3::UnitX(), Vec3::UnitX(), -Vec3::UnitY(), Vec3::UnitY()};
  const int k = static_cast<int>(std::min_element(faces, faces + 4) - faces);
  return Penetration{faces[k] + prim.radius, normals[k], Vec3(cx, cy, z) - prim.radius * normals[k]};
}

Vec3 penetration_force(const Penetration& pen, const Vec3& velocity, const ContactParams& params) {
  const double rate = -velocity.dot(pen.normal);
  const double fn = contact_force(pen.depth, rate, params);
  if (fn == 0.0) return Vec3::Zero();
  Vec3 f = fn * pen.normal;
  const Vec3 vt = velocity - velocity.dot(pen.normal) * pen.normal;
  const double speed = vt.norm();
  if (speed > 0.0 && params.mu > 0.0) {
    f -= std::min(params.mu * fn, params.c_t * speed) * (vt / speed);
  }
  return f;
}

namespace {

void add_force(std::vector<PointForce>& out, int index, const std::optional<Penetration>& pen,
               const Primitive& prim, const ContactParams& params, bool ground) {
  if (!pen) return;
  const Vec3 f = penetration_force(*pen, prim.velocity_at(pen->point), params);
  const double normal = f.dot(pen->normal);
  if (normal > 0.0) out.push_back({index, pen->point, f, normal, ground});
}

}  // namespace

std::vector<PointForce> wall_contact(const std::vector<Primitive>& prims,
                                     const std::vector<WallBox>& walls, const ContactParams& params) {
  std::vector<PointForce> out;
  for (size_t i = 0; i < prims.size(); ++i) {
    for (const auto& w : walls) {
      add_force(out, static_cast<int>(i), box_penetration(prims[i], w), prims[i], params, false);
    }
  }
  return out;
}

std::vector<PointForce> environment_contact(const std::vector<Primitive>& prims,
                                            const Environment& env, const ContactParams& params) {
  std::vector<PointForce> out = wall_contact(prims, env.walls, params);
  if (env.ground_z) {
    for (size_t i = 0; i < prims.size(); ++i) {
      add_force(out, static_cast<int>(i), ground_penetration(prims[i], *env.ground_z), prims[i], params,
                true);
    }
  }
  return out;
}

}  // namespace holoarm
