#include "bigrasp/energy/contacts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/LU>

namespace bigrasp::energy {

Eigen::VectorXd ContactSet::stacked_normals() const {
  Eigen::VectorXd c(3 * contacts.size());
  for (std::size_t j = 0; j < contacts.size(); ++j) c.segment<3>(3 * j) = contacts[j].normal;
  return c;
}

std::vector<Contact> select_hand_contacts(const hand::PosedHand& posed, const ObjectModel& obj, bool left,
                                          int count) {
  const int n = static_cast<int>(posed.contact_points.size());
  std::vector<geometry::NearestPoint> near(n);
  for (int i = 0; i < n; ++i) near[i] = obj.shape->query(posed.contact_points[i]);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(near[a].distance) < std::abs(near[b].distance);
  });
  count = std::min(count, n);
  std::vector<Contact> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const int i = order[k];
    Contact c;
    c.point = near[i].point;
    c.normal = near[i].normal;
    c.anchor_position = posed.contact_points[i];
    c.distance = near[i].distance;
    c.anchor = i;
    c.left = left;
    c.nearest = near[i];
    out.push_back(c);
  }
  return out;
}

ContactSet select_contacts(const hand::PosedHand& left, const hand::PosedHand& right, const ObjectModel& obj,
                           hand::HandMask mask) {
  ContactSet cs;
  if (hand::uses_left(mask)) cs.contacts = select_hand_contacts(left, obj, true);
  if (hand::uses_right(mask)) {
    std::vector<Contact> r = select_hand_contacts(right, obj, false);
    cs.contacts.insert(cs.contacts.end(), r.begin(), r.end());
  }
  return cs;
}

Eigen::Matrix3d skew(const Vec3& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

GraspMatrix grasp_matrix(const ContactSet& cs, const Vec3& origin) {
  GraspMatrix g(6, 3 * cs.size());
  for (int j = 0; j < cs.size(); ++j) {
    g.block<3, 3>(0, 3 * j).setIdentity();
    g.block<3, 3>(3, 3 * j) = skew(cs.contacts[j].point - origin);
  }
  return g;
}

ForceClosure force_closure_terms(const GraspMatrix& G, const ContactSet& cs, double ridge) {
  ForceClosure out;
  if (cs.size() == 0) return out;
  out.e_fc = (G * cs.stacked_normals()).norm();
  const Eigen::Matrix<double, 6, 6> a = G * G.transpose() + ridge * Eigen::Matrix<double, 6, 6>::Identity();
  out.e_vew = 1.0 / std::sqrt(a.determinant());
  return out;
}

ForceClosureGradient force_closure_gradient(const ContactSet& cs, const Vec3& origin, double ridge) {
  ForceClosureGradient out;
  const int m = cs.size();
  out.d_fc.assign(m, Vec3::Zero());
  out.d_vew.assign(m, Vec3::Zero());
  if (m == 0) return out;
  const GraspMatrix G = grasp_matrix(cs, origin);
  out.value = force_closure_terms(G, cs, ridge);

  // E_fc = |w|, w = [sum c_j ; sum (x_j - o) x c_j]; d/dx_j = c_j x tau / |w|.
  const Eigen::Matrix<double, 6, 1> w = G * cs.stacked_normals();
  if (out.value.e_fc > 0.0) {
    const Vec3 tau = w.tail<3>() / out.value.e_fc;
    for (int j = 0; j < m; ++j) out.d_fc[j] = cs.contacts[j].normal.cross(tau);
  }

  // dE_vew/dG = -E_vew A^-1 G; only the skew block R_j depends on x_j.
  const Eigen::Matrix<double, 6, 6> a = G * G.transpose() + ridge * Eigen::Matrix<double, 6, 6>::Identity();
  const GraspMatrix dG = -out.value.e_vew * a.partialPivLu().solve(G);
  for (int j = 0; j < m; ++j) {
    const Eigen::Matrix3d M = dG.block<3, 3>(3, 3 * j);
    out.d_vew[j] = Vec3(M(2, 1) - M(1, 2), M(0, 2) - M(2, 0), M(1, 0) - M(0, 1));
  }
  return out;
}

}  // namespace bigrasp::energy
