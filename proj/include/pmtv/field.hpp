#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "pmtv/potential.hpp"

namespace pmtv {

/// Scalar function on a uniform 1D/2D cell grid with spacing h and
/// homogeneous Neumann boundaries. The domain is the centered box with side
/// shape[a] * h per axis; norms, means and inner products carry the h^dims
/// weight so they approximate their continuum counterparts.
class Field {
 public:
  Field() = default;
  Field(std::vector<int> shape, double spacing, double fill = 0.0);

  int dims() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  double spacing() const { return spacing_; }
  int size() const { return static_cast<int>(values_.size()); }
  double cell_volume() const;
  double domain_measure() const;
  double axis_length(int axis) const;
  /// Cell-center coordinate along an axis, domain centered at the origin.
  double coord(int axis, int index) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double& operator[](int idx) { return values_[idx]; }
  double operator[](int idx) const { return values_[idx]; }
  // 2D row-major access: index (i, j) -> i * shape[1] + j.
  double& at(int i, int j);
  double at(int i, int j) const;

  double l2_norm() const;
  double linf_norm() const;
  double mean() const;

  bool same_grid(const Field& other) const;

 private:
  std::vector<int> shape_;
  double spacing_ = 0.0;
  std::vector<double> values_;
};

double l2_inner(const Field& a, const Field& b);
double l2_distance(const Field& a, const Field& b);

/// Face-forward vector field: component `axis` lives on the forward face of
/// each cell; the outermost face per axis carries a zero normal component.
struct VectorField {
  std::vector<int> shape;
  double spacing = 0.0;
  int dims = 0;
  std::array<std::vector<double>, 2> comp;
};

/// Forward differences divided by h; last face per axis clamped to zero.
VectorField gradient(const Field& u);

/// Exact negative adjoint of gradient under the h^dims-weighted inner
/// products: <gradient(u), p> == -<u, divergence(p)> for all u and p, with
/// boundary normal components treated as zero.
Field divergence(const VectorField& p);

enum class EnergyKind { kNonconvex, kConvexified, kTotalVariation };

/// Sum over cells of h^dims * g(|grad u|) with g the potential, its convex
/// envelope, or the identity (total variation).
double energy(const Field& u, EnergyKind kind,
              const ScalarPotential* pot = nullptr,
              const ConvexEnvelope* env = nullptr);

/// L2 gradient of the convexified energy, i.e. -div of the degenerate flux
/// flux_coefficient(|grad u|) * grad u. Its discrete L2 norm is the
/// descending slope of the energy at u.
Field slope_field(const Field& u, const ConvexEnvelope& env);

// Serialization. CSV: 1D uses an `x,value` header; 2D uses a `# nx,ny,h`
// comment line followed by the row-major value matrix. JSON carries
// shape/spacing/values.
void write_csv(const Field& u, std::ostream& out);
Field read_csv(std::istream& in);
std::string to_json_string(const Field& u);
Field field_from_json_string(const std::string& text);
void save_field(const Field& u, const std::string& path);
Field load_field(const std::string& path);

namespace detail {
// Allocation-free variants for inner solver loops.
void gradient_into(const Field& u, VectorField& out);
void divergence_into(const VectorField& p, Field& out);
void slope_field_into(const Field& u, const ConvexEnvelope& env, Field& out,
                      VectorField& scratch);
double convexified_energy(const Field& u, const ConvexEnvelope& env,
                          VectorField& scratch);
}  // namespace detail

}  // namespace pmtv
