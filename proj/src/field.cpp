#include "pmtv/field.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace pmtv {

namespace {

void check_shape(const std::vector<int>& shape, double spacing) {
  if (shape.empty() || shape.size() > 2) {
    throw std::invalid_argument("field must be 1D or 2D");
  }
  for (int n : shape) {
    if (n < 2) {
      throw std::invalid_argument("field needs at least 2 cells per axis");
    }
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw std::invalid_argument("grid spacing must be positive and finite");
  }
}

int total_cells(const std::vector<int>& shape) {
  int n = 1;
  for (int s : shape) n *= s;
  return n;
}

}  // namespace

Field::Field(std::vector<int> shape, double spacing, double fill)
    : shape_(std::move(shape)), spacing_(spacing) {
  check_shape(shape_, spacing_);
  values_.assign(total_cells(shape_), fill);
}

double Field::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dims(); ++a) v *= spacing_;
  return v;
}

double Field::domain_measure() const {
  return cell_volume() * static_cast<double>(size());
}

double Field::axis_length(int axis) const {
  return shape_[axis] * spacing_;
}

double Field::coord(int axis, int index) const {
  return (index + 0.5) * spacing_ - 0.5 * axis_length(axis);
}

double& Field::at(int i, int j) { return values_[i * shape_[1] + j]; }
double Field::at(int i, int j) const { return values_[i * shape_[1] + j]; }

double Field::l2_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s * cell_volume());
}

double Field::linf_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::fabs(v));
  return m;
}

double Field::mean() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s / static_cast<double>(size());
}

bool Field::same_grid(const Field& other) const {
  return shape_ == other.shape_ && spacing_ == other.spacing_;
}

double l2_inner(const Field& a, const Field& b) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * a.cell_volume();
}

double l2_distance(const Field& a, const Field& b) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s * a.cell_volume());
}

namespace detail {

void gradient_into(const Field& u, VectorField& out) {
  const auto& shape = u.shape();
  out.shape = shape;
  out.spacing = u.spacing();
  out.dims = u.dims();
  const double inv_h = 1.0 / u.spacing();
  const auto& v = u.values();
  if (u.dims() == 1) {
    const int n = shape[0];
    out.comp[0].assign(n, 0.0);
    for (int i = 0; i + 1 < n; ++i) {
      out.comp[0][i] = (v[i + 1] - v[i]) * inv_h;
    }
  } else {
    const int nx = shape[0];
    const int ny = shape[1];
    out.comp[0].assign(nx * ny, 0.0);
    out.comp[1].assign(nx * ny, 0.0);
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const int idx = i * ny + j;
        if (i + 1 < nx) out.comp[0][idx] = (v[idx + ny] - v[idx]) * inv_h;
        if (j + 1 < ny) out.comp[1][idx] = (v[idx + 1] - v[idx]) * inv_h;
      }
    }
  }
}

void divergence_into(const VectorField& p, Field& out) {
  if (out.shape() != p.shape || out.spacing() != p.spacing) {
    out = Field(p.shape, p.spacing, 0.0);
  }
  const double inv_h = 1.0 / p.spacing;
  auto& d = out.values();
  if (p.dims == 1) {
    const int n = p.shape[0];
    for (int i = 0; i < n; ++i) {
      const double fwd = (i + 1 < n) ? p.comp[0][i] : 0.0;
      const double bwd = (i > 0) ? p.comp[0][i - 1] : 0.0;
      d[i] = (fwd - bwd) * inv_h;
    }
  } else {
    const int nx = p.shape[0];
    const int ny = p.shape[1];
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const int idx = i * ny + j;
        const double fx = (i + 1 < nx) ? p.comp[0][idx] : 0.0;
        const double bx = (i > 0) ? p.comp[0][idx - ny] : 0.0;
        const double fy = (j + 1 < ny) ? p.comp[1][idx] : 0.0;
        const double by = (j > 0) ? p.comp[1][idx - 1] : 0.0;
        d[idx] = (fx - bx + fy - by) * inv_h;
      }
    }
  }
}

double convexified_energy(const Field& u, const ConvexEnvelope& env,
                          VectorField& scratch) {
  gradient_into(u, scratch);
  const double vol = u.cell_volume();
  double e = 0.0;
  if (u.dims() == 1) {
    for (double g : scratch.comp[0]) e += env.value(std::fabs(g));
  } else {
    for (int idx = 0; idx < u.size(); ++idx) {
      const double gx = scratch.comp[0][idx];
      const double gy = scratch.comp[1][idx];
      e += env.value(std::hypot(gx, gy));
    }
  }
  return e * vol;
}

void slope_field_into(const Field& u, const ConvexEnvelope& env, Field& out,
                      VectorField& scratch) {
  gradient_into(u, scratch);
  if (u.dims() == 1) {
    for (double& g : scratch.comp[0]) {
      g *= env.flux_coefficient(std::fabs(g));
    }
  } else {
    for (int idx = 0; idx < u.size(); ++idx) {
      const double gx = scratch.comp[0][idx];
      const double gy = scratch.comp[1][idx];
      const double c = env.flux_coefficient(std::hypot(gx, gy));
      scratch.comp[0][idx] = c * gx;
      scratch.comp[1][idx] = c * gy;
    }
  }
  divergence_into(scratch, out);
  for (double& v : out.values()) v = -v;
}

}  // namespace detail

VectorField gradient(const Field& u) {
  VectorField out;
  detail::gradient_into(u, out);
  return out;
}

Field divergence(const VectorField& p) {
  Field out(p.shape, p.spacing, 0.0);
  detail::divergence_into(p, out);
  return out;
}

double energy(const Field& u, EnergyKind kind, const ScalarPotential* pot,
              const ConvexEnvelope* env) {
  if (kind == EnergyKind::kNonconvex && pot == nullptr) {
    throw std::invalid_argument("nonconvex energy requires a potential");
  }
  if (kind == EnergyKind::kConvexified && env == nullptr) {
    throw std::invalid_argument("convexified energy requires an envelope");
  }
  VectorField grad;
  detail::gradient_into(u, grad);
  auto g = [&](double s) {
    switch (kind) {
      case EnergyKind::kNonconvex:
        return pot->value(s);
      case EnergyKind::kConvexified:
        return env->value(s);
      case EnergyKind::kTotalVariation:
      default:
        return s;
    }
  };
  double e = 0.0;
  if (u.dims() == 1) {
    for (double gx : grad.comp[0]) e += g(std::fabs(gx));
  } else {
    for (int idx = 0; idx < u.size(); ++idx) {
      e += g(std::hypot(grad.comp[0][idx], grad.comp[1][idx]));
    }
  }
  return e * u.cell_volume();
}

Field slope_field(const Field& u, const ConvexEnvelope& env) {
  Field out(u.shape(), u.spacing(), 0.0);
  VectorField scratch;
  detail::slope_field_into(u, env, out, scratch);
  return out;
}

void write_csv(const Field& u, std::ostream& out) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  if (u.dims() == 1) {
    out << "x,value\n";
    for (int i = 0; i < u.size(); ++i) {
      out << u.coord(0, i) << "," << u[i] << "\n";
    }
  } else {
    out << "# " << u.shape()[0] << "," << u.shape()[1] << "," << u.spacing()
        << "\n";
    for (int i = 0; i < u.shape()[0]; ++i) {
      for (int j = 0; j < u.shape()[1]; ++j) {
        out << u.at(i, j) << (j + 1 < u.shape()[1] ? ',' : '\n');
      }
    }
  }
}

Field read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("empty field CSV");
  }
  if (!line.empty() && line[0] == '#') {
    int nx = 0, ny = 0;
    double h = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream header(line.substr(1));
    if (!(header >> nx >> c1 >> ny >> c2 >> h) || c1 != ',' || c2 != ',') {
      throw std::invalid_argument("malformed 2D field header: " + line);
    }
    Field u({nx, ny}, h, 0.0);
    for (int i = 0; i < nx; ++i) {
      if (!std::getline(in, line)) {
        throw std::invalid_argument("truncated 2D field CSV");
      }
      std::istringstream row(line);
      std::string cell;
      for (int j = 0; j < ny; ++j) {
        if (!std::getline(row, cell, ',')) {
          throw std::invalid_argument("short row in 2D field CSV");
        }
        u.at(i, j) = std::stod(cell);
      }
    }
    return u;
  }
  // 1D: header then x,value rows; spacing recovered from consecutive x.
  std::vector<double> xs, vs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string xa, va;
    if (!std::getline(row, xa, ',') || !std::getline(row, va, ',')) {
      throw std::invalid_argument("malformed 1D field row: " + line);
    }
    xs.push_back(std::stod(xa));
    vs.push_back(std::stod(va));
  }
  if (xs.size() < 2) {
    throw std::invalid_argument("1D field CSV needs at least 2 rows");
  }
  Field u({static_cast<int>(vs.size())}, xs[1] - xs[0], 0.0);
  u.values() = vs;
  return u;
}

std::string to_json_string(const Field& u) {
  nlohmann::json j;
  j["shape"] = u.shape();
  j["spacing"] = u.spacing();
  j["values"] = u.values();
  return j.dump();
}

Field field_from_json_string(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Field u(j.at("shape").get<std::vector<int>>(), j.at("spacing").get<double>(),
          0.0);
  const auto vals = j.at("values").get<std::vector<double>>();
  if (static_cast<int>(vals.size()) != u.size()) {
    throw std::invalid_argument("field JSON: values do not match shape");
  }
  u.values() = vals;
  return u;
}

void save_field(const Field& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    out << to_json_string(u) << "\n";
  } else {
    write_csv(u, out);
  }
}

Field load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open field file: " + path);
  }
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    std::ostringstream buf;
    buf << in.rdbuf();
    return field_from_json_string(buf.str());
  }
  return read_csv(in);
}

}  // namespace pmtv
