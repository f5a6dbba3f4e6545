#include "shapeflow/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "shapeflow/rng.hpp"

namespace shapeflow {

SdfPrimitive SdfPrimitive::sphere(double r, const Vec3& center) {
  SdfPrimitive p;
  p.kind = Kind::sphere;
  p.radius = r;
  p.translation = center;
  return p;
}

SdfPrimitive SdfPrimitive::box(const Vec3& half_extents, const Mat3& rot, const Vec3& t) {
  SdfPrimitive p;
  p.kind = Kind::box;
  p.half_extents = half_extents;
  p.rotation = rot;
  p.translation = t;
  return p;
}

SdfPrimitive SdfPrimitive::capsule(const Vec3& a, const Vec3& b, double r) {
  SdfPrimitive p;
  p.kind = Kind::capsule;
  p.seg_a = a;
  p.seg_b = b;
  p.radius = r;
  return p;
}

SdfPrimitive SdfPrimitive::ellipsoid(const Vec3& radii, const Mat3& rot, const Vec3& t) {
  SdfPrimitive p;
  p.kind = Kind::ellipsoid;
  p.radii = radii;
  p.rotation = rot;
  p.translation = t;
  return p;
}

SdfPrimitive SdfPrimitive::group(std::vector<SdfPrimitive> members) {
  SdfPrimitive p;
  p.kind = Kind::group;
  p.members = std::move(members);
  return p;
}

void SdfPrimitive::scale_uniform(double s) {
  radius *= s;
  half_extents *= s;
  radii *= s;
  seg_a *= s;
  seg_b *= s;
  translation *= s;
  for (auto& m : members) m.scale_uniform(s);
}

bool SdfPrimitive::valid(std::string* why) const {
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  if (!is_orthonormal(rotation)) return fail("rotation not orthonormal");
  if (!finite(translation)) return fail("translation not finite");
  switch (kind) {
    case Kind::sphere:
      if (!(radius > 0)) return fail("sphere radius must be positive");
      break;
    case Kind::box:
      if (!(half_extents.x > 0 && half_extents.y > 0 && half_extents.z > 0))
        return fail("box half extents must be positive");
      break;
    case Kind::capsule:
      if (!(radius > 0)) return fail("capsule radius must be positive");
      if (norm(seg_b - seg_a) == 0) return fail("capsule endpoints coincide");
      break;
    case Kind::ellipsoid:
      if (!(radii.x > 0 && radii.y > 0 && radii.z > 0))
        return fail("ellipsoid radii must be positive");
      break;
    case Kind::group:
      if (members.empty()) return fail("group has no members");
      for (const auto& m : members)
        if (!m.valid(why)) return false;
      break;
  }
  return true;
}

namespace {

Vec3 to_local(const SdfPrimitive& p, const Vec3& q) {
  return mul_transposed(p.rotation, q - p.translation);
}

double sdf_box_local(const Vec3& q, const Vec3& he) {
  Vec3 d = cwise_abs(q) - he;
  Vec3 dpos = cwise_max(d, {0, 0, 0});
  return norm(dpos) + std::min(max_component(d), 0.0);
}

double sdf_capsule_local(const Vec3& q, const Vec3& a, const Vec3& b, double r) {
  Vec3 pa = q - a, ba = b - a;
  double h = std::clamp(dot(pa, ba) / dot(ba, ba), 0.0, 1.0);
  return norm(pa - ba * h) - r;
}

// Closest-point distance to an axis-aligned ellipsoid, via bisection on the
// Lagrange parameter of the projection. Exact zero components are nudged by
// 1e-9; the distance is 1-Lipschitz in the query, so the induced error stays
// below the documented 1e-6 bound.
double sdf_ellipsoid_local(const Vec3& q, const Vec3& radii, Vec3* closest = nullptr) {
  double a2[3] = {radii.x * radii.x, radii.y * radii.y, radii.z * radii.z};
  double y[3];
  double sign_flip[3];
  for (int i = 0; i < 3; ++i) {
    double v = std::fabs(q[i]);
    sign_flip[i] = (q[i] < 0) ? -1.0 : 1.0;
    y[i] = (v < 1e-9) ? 1e-9 : v;
  }

  double k_inside = 0;
  for (int i = 0; i < 3; ++i) k_inside += (y[i] * y[i]) / a2[i];
  double sgn = (k_inside < 1.0) ? -1.0 : 1.0;

  // F(t) = sum (a_i y_i / (t + a_i^2))^2 - 1, strictly decreasing on the
  // bracket; unique root t* > -min(a_i^2).
  auto F = [&](double t) {
    double s = 0;
    for (int i = 0; i < 3; ++i) {
      double r = radii[i] * y[i] / (t + a2[i]);
      s += r * r;
    }
    return s - 1.0;
  };

  double tlo = -std::min({a2[0], a2[1], a2[2]});
  double thi = norm(Vec3{y[0], y[1], y[2]}) * std::max({radii.x, radii.y, radii.z});
  thi = std::max(thi, 1.0);
  while (F(thi) > 0) thi *= 2.0;
  // shift the lower bracket off the pole
  double tlo_eps = tlo + 1e-300;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (tlo_eps + thi);
    if (mid == tlo_eps || mid == thi) break;
    if (F(mid) > 0)
      tlo_eps = mid;
    else
      thi = mid;
  }
  double t = 0.5 * (tlo_eps + thi);
  Vec3 x{a2[0] * y[0] / (t + a2[0]), a2[1] * y[1] / (t + a2[1]), a2[2] * y[2] / (t + a2[2])};
  double dist = norm(x - Vec3{y[0], y[1], y[2]});
  if (closest) *closest = {x.x * sign_flip[0], x.y * sign_flip[1], x.z * sign_flip[2]};
  return sgn * dist;
}

Vec3 grad_box_local(const Vec3& q, const Vec3& he) {
  Vec3 aq = cwise_abs(q);
  Vec3 d = aq - he;
  Vec3 sgn{q.x < 0 ? -1.0 : 1.0, q.y < 0 ? -1.0 : 1.0, q.z < 0 ? -1.0 : 1.0};
  if (d.x > 0 || d.y > 0 || d.z > 0) {
    Vec3 dpos = cwise_max(d, {0, 0, 0});
    Vec3 g = normalized(dpos);
    return cwise_mul(g, sgn);
  }
  // inside: gradient points through the nearest face
  int axis = 0;
  if (d.y > d[axis]) axis = 1;
  if (d.z > d[axis]) axis = 2;
  Vec3 g{0, 0, 0};
  g[axis] = sgn[axis];
  return g;
}

}  // namespace

double sdf_eval(const SdfPrimitive& prim, const Vec3& q) {
  switch (prim.kind) {
    case SdfPrimitive::Kind::sphere:
      return norm(q - prim.translation) - prim.radius;
    case SdfPrimitive::Kind::box:
      return sdf_box_local(to_local(prim, q), prim.half_extents);
    case SdfPrimitive::Kind::capsule:
      return sdf_capsule_local(to_local(prim, q), prim.seg_a, prim.seg_b, prim.radius);
    case SdfPrimitive::Kind::ellipsoid:
      return sdf_ellipsoid_local(to_local(prim, q), prim.radii);
    case SdfPrimitive::Kind::group: {
      Vec3 local = to_local(prim, q);  // group pose applies to all members
      double best = std::numeric_limits<double>::infinity();
      for (const auto& m : prim.members) best = std::min(best, sdf_eval(m, local));
      return best;
    }
  }
  return 0;
}

Vec3 sdf_gradient(const SdfPrimitive& prim, const Vec3& q) {
  switch (prim.kind) {
    case SdfPrimitive::Kind::sphere: {
      Vec3 d = q - prim.translation;
      double n = norm(d);
      return n > 1e-12 ? d / n : Vec3{1, 0, 0};
    }
    case SdfPrimitive::Kind::box:
      return prim.rotation * grad_box_local(to_local(prim, q), prim.half_extents);
    case SdfPrimitive::Kind::capsule: {
      Vec3 p = to_local(prim, q);
      Vec3 pa = p - prim.seg_a, ba = prim.seg_b - prim.seg_a;
      double h = std::clamp(dot(pa, ba) / dot(ba, ba), 0.0, 1.0);
      Vec3 d = pa - ba * h;
      double n = norm(d);
      Vec3 g = n > 1e-12 ? d / n : Vec3{1, 0, 0};
      return prim.rotation * g;
    }
    case SdfPrimitive::Kind::ellipsoid: {
      Vec3 p = to_local(prim, q);
      Vec3 closest;
      double d = sdf_ellipsoid_local(p, prim.radii, &closest);
      Vec3 diff = p - closest;
      if (norm(diff) > 1e-9) return prim.rotation * (normalized(diff) * (d < 0 ? -1.0 : 1.0));
      // on the surface: gradient of the implicit function
      Vec3 g{closest.x / (prim.radii.x * prim.radii.x), closest.y / (prim.radii.y * prim.radii.y),
             closest.z / (prim.radii.z * prim.radii.z)};
      return prim.rotation * normalized(g);
    }
    case SdfPrimitive::Kind::group: {
      Vec3 local = to_local(prim, q);
      double best = std::numeric_limits<double>::infinity();
      const SdfPrimitive* arg = nullptr;
      for (const auto& m : prim.members) {
        double d = sdf_eval(m, local);
        if (d < best) {
          best = d;
          arg = &m;
        }
      }
      return prim.rotation * sdf_gradient(*arg, local);
    }
  }
  return {1, 0, 0};
}

double surface_area(const SdfPrimitive& prim) {
  switch (prim.kind) {
    case SdfPrimitive::Kind::sphere:
      return 4.0 * M_PI * prim.radius * prim.radius;
    case SdfPrimitive::Kind::box: {
      const Vec3& h = prim.half_extents;
      return 8.0 * (h.x * h.y + h.y * h.z + h.z * h.x);
    }
    case SdfPrimitive::Kind::capsule: {
      double len = norm(prim.seg_b - prim.seg_a);
      return 2.0 * M_PI * prim.radius * len + 4.0 * M_PI * prim.radius * prim.radius;
    }
    case SdfPrimitive::Kind::ellipsoid: {
      // Thomsen approximation, adequate for sampling weights
      const double p = 1.6075;
      double a = prim.radii.x, b = prim.radii.y, c = prim.radii.z;
      double ap = std::pow(a, p), bp = std::pow(b, p), cp = std::pow(c, p);
      return 4.0 * M_PI * std::pow((ap * bp + ap * cp + bp * cp) / 3.0, 1.0 / p);
    }
    case SdfPrimitive::Kind::group: {
      double s = 0;
      for (const auto& m : prim.members) s += surface_area(m);
      return s;
    }
  }
  return 0;
}

namespace {

// One candidate point drawn uniformly from the primitive's own surface,
// position and normal in world frame.
void sample_one(const SdfPrimitive& prim, Rng& rng, Vec3* pos, Vec3* nrm) {
  switch (prim.kind) {
    case SdfPrimitive::Kind::sphere: {
      double z = rng.uniform(-1.0, 1.0);
      double phi = rng.uniform(0.0, 2.0 * M_PI);
      double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vec3 dir{s * std::cos(phi), s * std::sin(phi), z};
      *pos = prim.translation + dir * prim.radius;
      *nrm = dir;
      return;
    }
    case SdfPrimitive::Kind::box: {
      const Vec3& h = prim.half_extents;
      double areas[3] = {h.y * h.z, h.x * h.z, h.x * h.y};  // per axis-pair
      double total = areas[0] + areas[1] + areas[2];
      double u = rng.uniform() * total;
      int axis = (u < areas[0]) ? 0 : (u < areas[0] + areas[1] ? 1 : 2);
      double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
      Vec3 p;
      p[axis] = side * h[axis];
      int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
      p[a1] = rng.uniform(-h[a1], h[a1]);
      p[a2] = rng.uniform(-h[a2], h[a2]);
      Vec3 n{0, 0, 0};
      n[axis] = side;
      *pos = prim.rotation * p + prim.translation;
      *nrm = prim.rotation * n;
      return;
    }
    case SdfPrimitive::Kind::capsule: {
      Vec3 ba = prim.seg_b - prim.seg_a;
      double len = norm(ba);
      Vec3 axis = ba / len;
      double side_area = 2.0 * M_PI * prim.radius * len;
      double cap_area = 4.0 * M_PI * prim.radius * prim.radius;
      Vec3 p, n;
      if (rng.uniform() * (side_area + cap_area) < side_area) {
        double t = rng.uniform();
        double phi = rng.uniform(0.0, 2.0 * M_PI);
        // orthonormal frame around the axis
        Vec3 ref = std::fabs(axis.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        Vec3 e1 = normalized(cross(axis, ref));
        Vec3 e2 = cross(axis, e1);
        n = e1 * std::cos(phi) + e2 * std::sin(phi);
        p = prim.seg_a + ba * t + n * prim.radius;
      } else {
        double z = rng.uniform(-1.0, 1.0);
        double phi = rng.uniform(0.0, 2.0 * M_PI);
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec3 dir{s * std::cos(phi), s * std::sin(phi), z};
        Vec3 center = dot(dir, axis) >= 0 ? prim.seg_b : prim.seg_a;
        n = dir;
        p = center + dir * prim.radius;
      }
      *pos = prim.rotation * p + prim.translation;
      *nrm = prim.rotation * n;
      return;
    }
    case SdfPrimitive::Kind::ellipsoid: {
      const Vec3& r = prim.radii;
      double wmax = std::max({r.y * r.z, r.x * r.z, r.x * r.y});
      for (;;) {
        double z = rng.uniform(-1.0, 1.0);
        double phi = rng.uniform(0.0, 2.0 * M_PI);
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec3 u{s * std::cos(phi), s * std::sin(phi), z};
        double w = std::sqrt((r.y * r.z * u.x) * (r.y * r.z * u.x) +
                             (r.x * r.z * u.y) * (r.x * r.z * u.y) +
                             (r.x * r.y * u.z) * (r.x * r.y * u.z));
        if (rng.uniform() * wmax <= w) {
          Vec3 p{r.x * u.x, r.y * u.y, r.z * u.z};
          Vec3 n = normalized(Vec3{u.x / r.x, u.y / r.y, u.z / r.z});
          *pos = prim.rotation * p + prim.translation;
          *nrm = prim.rotation * n;
          return;
        }
      }
    }
    case SdfPrimitive::Kind::group:
      break;  // handled by caller
  }
}

}  // namespace

PointSet sample_surface(const SdfPrimitive& prim, int n, uint64_t rng_seed) {
  if (n < 1) throw std::invalid_argument("sample_surface: n must be >= 1");
  std::string why;
  if (!prim.valid(&why)) throw std::invalid_argument("sample_surface: invalid primitive: " + why);

  // flatten nested groups into world-posed leaves, picked area-proportionally
  std::vector<SdfPrimitive> leaves;
  std::vector<double> cum;
  std::function<void(const SdfPrimitive&, const Mat3&, const Vec3&)> collect =
      [&](const SdfPrimitive& p, const Mat3& rot, const Vec3& t) {
        Mat3 world_rot = rot * p.rotation;
        Vec3 world_t = rot * p.translation + t;
        if (p.kind == SdfPrimitive::Kind::group) {
          for (const auto& m : p.members) collect(m, world_rot, world_t);
        } else {
          SdfPrimitive leaf = p;
          leaf.members.clear();
          leaf.rotation = world_rot;
          leaf.translation = world_t;
          leaves.push_back(std::move(leaf));
          cum.push_back((cum.empty() ? 0.0 : cum.back()) + surface_area(p));
        }
      };
  collect(prim, Mat3::identity(), {0, 0, 0});

  Rng rng(rng_seed);
  PointSet out;
  out.points.reserve(n);
  out.normals.reserve(n);
  const int64_t cap = 64LL * n + 1024;
  int64_t attempts = 0;
  const bool is_union = leaves.size() > 1;
  while ((int)out.points.size() < n) {
    if (++attempts > cap)
      throw std::runtime_error("sample_surface: rejection cap exceeded (overlapping union?)");
    double u = rng.uniform() * cum.back();
    size_t idx = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
    idx = std::min(idx, leaves.size() - 1);
    Vec3 p, nv;
    sample_one(leaves[idx], rng, &p, &nv);
    if (is_union && sdf_eval(prim, p) < -1e-7) continue;  // interior to another member
    out.points.push_back(p);
    out.normals.push_back(nv);
  }
  return out;
}

SdfGrid make_sdf_grid(const SdfPrimitive& prim, int resolution) {
  if (resolution < 2) throw std::invalid_argument("make_sdf_grid: resolution must be >= 2");
  SdfGrid grid;
  grid.resolution = resolution;
  grid.values.resize(size_t(resolution) * resolution * resolution);
  for (int ix = 0; ix < resolution; ++ix) {
    double x = grid.lattice_coord(ix);
    for (int iy = 0; iy < resolution; ++iy) {
      double y = grid.lattice_coord(iy);
      for (int iz = 0; iz < resolution; ++iz) {
        grid.at(ix, iy, iz) = sdf_eval(prim, {x, y, grid.lattice_coord(iz)});
      }
    }
  }
  return grid;
}

}  // namespace shapeflow
