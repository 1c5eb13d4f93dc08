#include "sd2/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sd2/errors.hpp"
#include "sd2/parallel.hpp"

namespace sd2 {

// ---------------------------------------------------------------- BoxDomain

BoxDomain::BoxDomain(Point lower, Point upper, std::vector<int> resolution)
    : lower_(std::move(lower)), upper_(std::move(upper)), resolution_(std::move(resolution)) {
  const std::size_t n = lower_.size();
  if (n < 1 || n > 3) throw ValidationError("BoxDomain: dimension must be 1, 2 or 3");
  if (upper_.size() != n || resolution_.size() != n)
    throw ValidationError("BoxDomain: corner/resolution lengths differ");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(upper_[i] > lower_[i])) throw ValidationError("BoxDomain: upper must exceed lower");
    if (resolution_[i] < 1) throw ValidationError("BoxDomain: resolution must be >= 1");
  }
}

BoxDomain BoxDomain::unit_cube(std::vector<int> resolution) {
  const std::size_t n = resolution.size();
  return BoxDomain(Point(n, -0.5), Point(n, 0.5), std::move(resolution));
}

std::size_t BoxDomain::cell_count() const {
  std::size_t n = 1;
  for (int r : resolution_) n *= static_cast<std::size_t>(r);
  return n;
}

std::vector<int> BoxDomain::multi_index(std::size_t cell) const {
  std::vector<int> m(dim());
  for (int k = dim() - 1; k >= 0; --k) {
    m[k] = static_cast<int>(cell % resolution_[k]);
    cell /= resolution_[k];
  }
  return m;
}

std::size_t BoxDomain::cell_index(std::span<const int> multi) const {
  std::size_t idx = 0;
  for (int k = 0; k < dim(); ++k) idx = idx * resolution_[k] + static_cast<std::size_t>(multi[k]);
  return idx;
}

double BoxDomain::cell_volume() const {
  double v = 1.0;
  for (int k = 0; k < dim(); ++k) v *= cell_width(k);
  return v;
}

double BoxDomain::volume() const {
  double v = 1.0;
  for (int k = 0; k < dim(); ++k) v *= extent(k);
  return v;
}

Point BoxDomain::cell_center(std::size_t cell) const {
  const auto m = multi_index(cell);
  Point c(dim());
  for (int k = 0; k < dim(); ++k) c[k] = lower_[k] + (m[k] + 0.5) * cell_width(k);
  return c;
}

Box BoxDomain::cell_box(std::size_t cell) const {
  const auto m = multi_index(cell);
  Box b{Point(dim()), Point(dim())};
  for (int k = 0; k < dim(); ++k) {
    b.lower[k] = lower_[k] + m[k] * cell_width(k);
    b.upper[k] = lower_[k] + (m[k] + 1) * cell_width(k);
  }
  return b;
}

double BoxDomain::diameter() const {
  double s = 0.0;
  for (int k = 0; k < dim(); ++k) s += extent(k) * extent(k);
  return std::sqrt(s);
}

std::size_t BoxDomain::locate(const Point& y) const {
  std::vector<int> m(dim());
  for (int k = 0; k < dim(); ++k) {
    const int i = static_cast<int>(std::floor((y[k] - lower_[k]) / cell_width(k)));
    m[k] = std::clamp(i, 0, resolution_[k] - 1);
  }
  return cell_index(m);
}

BoxDomain BoxDomain::refined(int factor) const {
  if (factor < 1) throw ValidationError("refine factor must be >= 1");
  auto r = resolution_;
  for (int& v : r) v *= factor;
  return BoxDomain(lower_, upper_, r);
}

// ----------------------------------------------------------- PiecewiseField

PiecewiseField::PiecewiseField(BoxDomain domain, Shape value_shape)
    : domain_(std::move(domain)), value_shape_(std::move(value_shape)) {
  const std::size_t n = domain_.cell_count();
  values_.assign(n, Tensor(value_shape_));
  gradients_.assign(n, Tensor(gradient_shape()));
  hessians_.assign(n, Tensor(hessian_shape()));
}

void PiecewiseField::set_value(std::size_t cell, Tensor value) {
  if (value.shape() != value_shape_)
    throw ValidationError("set_value: expected shape " + shape_to_string(value_shape_) + ", got " +
                          shape_to_string(value.shape()));
  values_.at(cell) = std::move(value);
}

void PiecewiseField::set_gradient(std::size_t cell, Tensor gradient) {
  if (gradient.shape() != gradient_shape())
    throw ValidationError("set_gradient: expected shape " + shape_to_string(gradient_shape()) +
                          ", got " + shape_to_string(gradient.shape()));
  gradients_.at(cell) = std::move(gradient);
}

void PiecewiseField::set_hessian(std::size_t cell, Tensor hessian) {
  if (hessian.shape() != hessian_shape())
    throw ValidationError("set_hessian: expected shape " + shape_to_string(hessian_shape()) +
                          ", got " + shape_to_string(hessian.shape()));
  hessians_.at(cell) = std::move(hessian);
}

namespace {

Point offset_from(const Point& y, const Point& c) {
  Point h(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) h[k] = y[k] - c[k];
  return h;
}

Tensor eval_poly(const Tensor& c, const Tensor& p, const Tensor& q, const Point& h) {
  Tensor r = c;
  r += contract_last(p, h);
  if (q.max_abs() > 0.0) r += 0.5 * contract_last(contract_last(q, h), h);
  return r;
}

Tensor grad_poly(const Tensor& p, const Tensor& q, const Point& h) {
  Tensor r = p;
  if (q.max_abs() > 0.0) r += contract_last(q, h);
  return r;
}

}  // namespace

Tensor PiecewiseField::eval(std::size_t cell, const Point& y) const {
  const Point h = offset_from(y, domain_.cell_center(cell));
  return eval_poly(values_[cell], gradients_[cell], hessians_[cell], h);
}

Tensor PiecewiseField::gradient_at(std::size_t cell, const Point& y) const {
  const Point h = offset_from(y, domain_.cell_center(cell));
  return grad_poly(gradients_[cell], hessians_[cell], h);
}

int PiecewiseField::degree() const {
  int deg = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (hessians_[i].max_abs() > 0.0) return 2;
    if (gradients_[i].max_abs() > 0.0) deg = 1;
  }
  return deg;
}

PiecewiseField PiecewiseField::gradient_field() const {
  PiecewiseField g(domain_, gradient_shape());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    g.set_value(i, gradients_[i]);
    g.set_gradient(i, hessians_[i]);
  }
  return g;
}

// ---------------------------------------------------------------- JumpFacet

Tensor JumpFacet::jump_at(const Point& y) const {
  return eval_poly(jump, jump_gradient, jump_hessian, offset_from(y, centroid));
}

namespace {

// Largest tangential coefficient of the jump polynomial.
double tangential_variation(const JumpFacet& f, bool second_order) {
  const int n = static_cast<int>(f.centroid.size());
  double m = 0.0;
  if (!second_order) {
    const std::size_t blocks = f.jump_gradient.size() / n;
    for (std::size_t b = 0; b < blocks; ++b)
      for (int k = 0; k < n; ++k)
        if (k != f.axis) m = std::max(m, std::abs(f.jump_gradient[b * n + k]));
  } else {
    const std::size_t nn = static_cast<std::size_t>(n * n);
    const std::size_t blocks = f.jump_hessian.size() / nn;
    for (std::size_t b = 0; b < blocks; ++b)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          if (k != f.axis && l != f.axis)
            m = std::max(m, std::abs(f.jump_hessian[b * nn + k * n + l]));
  }
  return m;
}

}  // namespace

Tensor JumpFacet::mean_jump() const {
  Tensor m = jump;
  const int n = static_cast<int>(centroid.size());
  const double hv = tangential_variation(*this, true);
  if (hv == 0.0) return m;
  const std::size_t nn = static_cast<std::size_t>(n * n);
  for (std::size_t b = 0; b < m.size(); ++b)
    for (int k = 0; k < n; ++k) {
      if (k == axis) continue;
      const double len = extent.upper[k] - extent.lower[k];
      m[b] += 0.5 * jump_hessian[b * nn + k * n + k] * len * len / 12.0;
    }
  return m;
}

bool JumpFacet::constant_jump(double tol) const {
  return tangential_variation(*this, false) <= tol && tangential_variation(*this, true) <= tol;
}

Box JumpFacet::tangential_box() const {
  Box b;
  for (int k = 0; k < static_cast<int>(centroid.size()); ++k) {
    if (k == axis) continue;
    b.lower.push_back(extent.lower[k]);
    b.upper.push_back(extent.upper[k]);
  }
  return b;
}

Point JumpFacet::ambient_point(const Point& t) const {
  Point y(centroid.size());
  std::size_t j = 0;
  for (int k = 0; k < static_cast<int>(centroid.size()); ++k) y[k] = (k == axis) ? centroid[k] : t[j++];
  return y;
}

// -------------------------------------------------------- BoundaryCondition

BoundaryCondition BoundaryCondition::free(int dim) {
  return BoundaryCondition{std::nullopt, std::vector<BoundaryMode>(dim, BoundaryMode::none)};
}

BoundaryCondition BoundaryCondition::uniform(int dim, BoundaryMode mode, std::optional<PiecewiseField> datum) {
  return BoundaryCondition{std::move(datum), std::vector<BoundaryMode>(dim, mode)};
}

// ----------------------------------------------------------------- jumps

namespace {

struct CellPoly {
  Tensor c, p, q;
};

CellPoly poly_of(const PiecewiseField& u, const PiecewiseField* b, std::size_t cell) {
  CellPoly r{u.value(cell), u.gradient(cell), u.hessian(cell)};
  if (b) {
    r.c -= b->value(cell);
    r.p -= b->gradient(cell);
    r.q -= b->hessian(cell);
  }
  return r;
}

Tensor eval_at(const CellPoly& cp, const Point& center, const Point& y) {
  return eval_poly(cp.c, cp.p, cp.q, offset_from(y, center));
}

Tensor grad_at(const CellPoly& cp, const Point& center, const Point& y) {
  return grad_poly(cp.p, cp.q, offset_from(y, center));
}

Box facet_extent(const BoxDomain& d, std::size_t cell, int axis, bool upper_face) {
  Box b = d.cell_box(cell);
  const double x = upper_face ? b.upper[axis] : b.lower[axis];
  b.lower[axis] = x;
  b.upper[axis] = x;
  return b;
}

double facet_area(const BoxDomain& d, int axis) {
  double a = 1.0;
  for (int k = 0; k < d.dim(); ++k)
    if (k != axis) a *= d.cell_width(k);
  return a;
}

// Max |jump| over corners, edge midpoints and center of the facet. Affine
// jumps attain their maximum norm at a corner; constant ones anywhere.
double facet_max_abs(const JumpFacet& f) {
  const bool affine = f.jump_hessian.max_abs() == 0.0;
  if (affine) {
    const int n = static_cast<int>(f.normal.size());
    bool constant = true;
    for (std::size_t i = 0; i < f.jump_gradient.size() && constant; ++i)
      constant = static_cast<int>(i % n) == f.axis || f.jump_gradient[i] == 0.0;
    if (constant) return f.jump.norm();
  }
  const Box t = f.tangential_box();
  const int m = t.dim();
  const int stride = affine ? 2 : 1;
  double best = 0.0;
  std::vector<int> idx(m, 0);
  Point tp(m);
  while (true) {
    for (int k = 0; k < m; ++k) tp[k] = t.lower[k] + 0.5 * idx[k] * (t.upper[k] - t.lower[k]);
    best = std::max(best, f.jump_at(f.ambient_point(tp)).norm());
    int k = 0;
    while (k < m && (idx[k] += stride) > 2) idx[k++] = 0;
    if (k == m) break;
  }
  return best;
}

JumpFacet make_facet(const BoxDomain& d, int axis, std::ptrdiff_t minus, std::ptrdiff_t plus,
                     bool boundary, const Box& extent) {
  JumpFacet f;
  f.axis = axis;
  f.minus_cell = minus;
  f.plus_cell = plus;
  f.boundary = boundary;
  f.extent = extent;
  f.centroid = extent.center();
  f.normal.assign(d.dim(), 0.0);
  f.normal[axis] = 1.0;
  f.area = facet_area(d, axis);
  return f;
}

void set_jump(JumpFacet& f, const CellPoly* plus, const Point* plus_center, const Point* plus_at,
              const CellPoly* minus, const Point* minus_center, const Shape& vshape, int n) {
  // plus_at: the point in the plus cell corresponding to the facet centroid
  // (differs from the centroid only across a periodic identification).
  f.jump = Tensor(vshape);
  f.jump_gradient = Tensor(append_shape(vshape, {n}));
  f.jump_hessian = Tensor(append_shape(vshape, {n, n}));
  if (plus) {
    f.jump += eval_at(*plus, *plus_center, *plus_at);
    f.jump_gradient += grad_at(*plus, *plus_center, *plus_at);
    f.jump_hessian += plus->q;
  }
  if (minus) {
    f.jump -= eval_at(*minus, *minus_center, f.centroid);
    f.jump_gradient -= grad_at(*minus, *minus_center, f.centroid);
    f.jump_hessian -= minus->q;
  }
}

// Cells whose Hessian vanishes identically.
std::vector<char> flat_cells(const PiecewiseField& u) {
  std::vector<char> flat(u.domain().cell_count());
  for (std::size_t c = 0; c < flat.size(); ++c) flat[c] = u.hessian(c).max_abs() == 0.0;
  return flat;
}

// When both cells carry the same gradient and no curvature, the jump across
// their common facet (interior, or periodic with `up` the wrapped cell) is the
// constant c⁺ - c⁻ - h ∂_axis u; returns its norm without building the facet,
// or +inf when the shortcut does not apply.
double flat_jump_norm(const PiecewiseField& u, const std::vector<char>& flat, std::size_t lo, std::size_t up,
                      int axis) {
  const Tensor &pl = u.gradient(lo), &pu = u.gradient(up);
  if (!flat[lo] || !flat[up] || !(pl == pu)) return std::numeric_limits<double>::infinity();
  const int n = u.domain().dim();
  const double h = u.domain().cell_width(axis);
  const Tensor &cl = u.value(lo), &cu = u.value(up);
  double s = 0.0;
  for (std::size_t i = 0; i < cl.size(); ++i) {
    const double j = cu[i] - cl[i] - h * pl[i * n + axis];
    s += j * j;
  }
  return std::sqrt(s);
}

std::vector<JumpFacet> interior_facets(const PiecewiseField& u, const PiecewiseField* b, double tol) {
  const BoxDomain& d = u.domain();
  const int n = d.dim();
  std::vector<JumpFacet> out;
  const bool shortcut = !b && tol >= 0.0;
  const std::vector<char> flat = shortcut ? flat_cells(u) : std::vector<char>();
  for (std::size_t cell = 0; cell < d.cell_count(); ++cell) {
    auto m = d.multi_index(cell);
    std::optional<CellPoly> pm;
    Point cm;
    for (int axis = 0; axis < n; ++axis) {
      if (m[axis] + 1 >= d.resolution()[axis]) continue;
      m[axis] += 1;
      const std::size_t up = d.cell_index(m);
      m[axis] -= 1;
      if (shortcut && flat_jump_norm(u, flat, cell, up, axis) <= tol) continue;
      JumpFacet f = make_facet(d, axis, static_cast<std::ptrdiff_t>(cell),
                               static_cast<std::ptrdiff_t>(up), false, facet_extent(d, cell, axis, true));
      if (!pm) {
        pm = poly_of(u, b, cell);
        cm = d.cell_center(cell);
      }
      const CellPoly pp = poly_of(u, b, up);
      const Point cp = d.cell_center(up);
      set_jump(f, &pp, &cp, &f.centroid, &*pm, &cm, u.value_shape(), n);
      if (tol < 0.0 || facet_max_abs(f) > tol) out.push_back(std::move(f));
    }
  }
  return out;
}

const PiecewiseField* datum_of(const PiecewiseField& u, const BoundaryCondition& bc) {
  if (!bc.datum) return nullptr;
  if (!(bc.datum->domain() == u.domain()) || bc.datum->value_shape() != u.value_shape())
    throw ValidationError("boundary datum must share the field's grid and value shape");
  return &*bc.datum;
}

std::vector<JumpFacet> boundary_facets(const PiecewiseField& u, const BoundaryCondition& bc, double tol) {
  const BoxDomain& d = u.domain();
  const int n = d.dim();
  if (static_cast<int>(bc.modes.size()) != n) throw ValidationError("boundary modes must list every axis");
  const PiecewiseField* b = datum_of(u, bc);
  std::vector<JumpFacet> out;
  const std::vector<char> flat = tol >= 0.0 ? flat_cells(u) : std::vector<char>();
  for (int axis = 0; axis < n; ++axis) {
    const BoundaryMode mode = bc.modes[axis];
    if (mode == BoundaryMode::none) continue;
    for (std::size_t cell = 0; cell < d.cell_count(); ++cell) {
      auto m = d.multi_index(cell);
      const bool lower = m[axis] == 0;
      const bool upper = m[axis] == d.resolution()[axis] - 1;
      if (!upper && !(lower && mode == BoundaryMode::dirichlet)) continue;
      if (mode == BoundaryMode::periodic && tol >= 0.0) {
        m[axis] = 0;
        const std::size_t wrap = d.cell_index(m);
        m[axis] = d.resolution()[axis] - 1;
        if (flat_jump_norm(u, flat, cell, wrap, axis) <= tol) continue;
      }
      const Point c = d.cell_center(cell);
      const CellPoly pv = poly_of(u, b, cell);
      if (mode == BoundaryMode::dirichlet) {
        if (m[axis] == 0) {
          JumpFacet f = make_facet(d, axis, -1, static_cast<std::ptrdiff_t>(cell), true,
                                   facet_extent(d, cell, axis, false));
          set_jump(f, &pv, &c, &f.centroid, nullptr, nullptr, u.value_shape(), n);
          if (tol < 0.0 || facet_max_abs(f) > tol) out.push_back(std::move(f));
        }
        if (m[axis] == d.resolution()[axis] - 1) {
          JumpFacet f = make_facet(d, axis, static_cast<std::ptrdiff_t>(cell), -1, true,
                                   facet_extent(d, cell, axis, true));
          set_jump(f, nullptr, nullptr, nullptr, &pv, &c, u.value_shape(), n);
          if (tol < 0.0 || facet_max_abs(f) > tol) out.push_back(std::move(f));
        }
      } else if (m[axis] == d.resolution()[axis] - 1) {
        // periodic: the facet on the upper face sees the lower cell across the identification
        m[axis] = 0;
        const std::size_t wrap = d.cell_index(m);
        JumpFacet f = make_facet(d, axis, static_cast<std::ptrdiff_t>(cell),
                                 static_cast<std::ptrdiff_t>(wrap), true, facet_extent(d, cell, axis, true));
        const CellPoly pw = poly_of(u, b, wrap);
        const Point cw = d.cell_center(wrap);
        Point at = f.centroid;
        at[axis] -= d.extent(axis);
        set_jump(f, &pw, &cw, &at, &pv, &c, u.value_shape(), n);
        if (tol < 0.0 || facet_max_abs(f) > tol) out.push_back(std::move(f));
      }
    }
  }
  return out;
}

}  // namespace

std::vector<JumpFacet> jump_set(const PiecewiseField& u, double tol) {
  return interior_facets(u, nullptr, tol);
}

std::vector<JumpFacet> boundary_jumps(const PiecewiseField& u, const BoundaryCondition& bc, double tol) {
  return boundary_facets(u, bc, tol);
}

std::vector<JumpFacet> jump_set(const PiecewiseField& u, const BoundaryCondition& bc, double tol) {
  auto out = interior_facets(u, nullptr, tol);
  auto bnd = boundary_facets(u, bc, tol);
  out.insert(out.end(), std::make_move_iterator(bnd.begin()), std::make_move_iterator(bnd.end()));
  return out;
}

// ------------------------------------------------------------ integration

double integrate_over_facet(const JumpFacet& facet,
                            const std::function<double(const Tensor&, const Point&)>& f) {
  if (facet.constant_jump()) return f(facet.jump, facet.centroid) * facet.area;
  return integrate_box(facet.tangential_box(), 8, [&](const Point& t) {
    const Point y = facet.ambient_point(t);
    return f(facet.jump_at(y), y);
  });
}

double integrate_abs_linear_over_facet(const JumpFacet& facet, const Tensor& coefficient) {
  require_same_shape(coefficient, facet.jump, "abs-linear facet integral");
  if (facet.constant_jump()) return std::abs(coefficient.dot(facet.jump)) * facet.area;
  if (tangential_variation(facet, true) == 0.0) {
    const int n = static_cast<int>(facet.centroid.size());
    std::vector<double> a;
    double b = coefficient.dot(facet.jump);
    for (int k = 0; k < n; ++k) {
      if (k == facet.axis) continue;
      double ak = 0.0;
      for (std::size_t i = 0; i < coefficient.size(); ++i) ak += coefficient[i] * facet.jump_gradient[i * n + k];
      a.push_back(ak);
      b -= ak * facet.centroid[k];
    }
    return integrate_abs_affine(a, b, facet.tangential_box());
  }
  return integrate_box(facet.tangential_box(), 8, [&](const Point& t) {
    return std::abs(coefficient.dot(facet.jump_at(facet.ambient_point(t))));
  });
}

double total_jump_mass(std::span<const JumpFacet> facets) {
  std::vector<double> parts(facets.size());
  for (std::size_t i = 0; i < facets.size(); ++i) {
    const JumpFacet& f = facets[i];
    if (f.jump.size() == 1 && !f.constant_jump()) {
      parts[i] = integrate_abs_linear_over_facet(f, Tensor(f.jump.shape(), {1.0}));
    } else {
      parts[i] = integrate_over_facet(f, [](const Tensor& j, const Point&) { return j.norm(); });
    }
  }
  return pairwise_sum(parts);
}

double total_jump_mass(const PiecewiseField& u) {
  const auto facets = jump_set(u);
  return total_jump_mass(facets);
}

namespace {

double cell_abs_integral(const BoxDomain& d, std::size_t cell, const Tensor& c, const Tensor& p, const Tensor& q) {
  const Box box = d.cell_box(cell);
  const Point center = d.cell_center(cell);
  if (p.max_abs() == 0.0 && q.max_abs() == 0.0) return c.norm() * box.volume();
  if (c.size() == 1 && q.max_abs() == 0.0) {
    const double b = c[0] - dot(p.data(), center);
    return integrate_abs_affine(p.data(), b, box);
  }
  return integrate_box(box, 8, [&](const Point& y) {
    return eval_poly(c, p, q, offset_from(y, center)).norm();
  });
}

int refinement_factor(const BoxDomain& coarse, const BoxDomain& fine) {
  if (coarse.lower() != fine.lower() || coarse.upper() != fine.upper())
    throw ValidationError("fields live on different boxes");
  int factor = 0;
  for (int k = 0; k < coarse.dim(); ++k) {
    const int r = coarse.resolution()[k];
    const int s = fine.resolution()[k];
    if (s % r != 0) return 0;
    if (factor == 0) factor = s / r;
    if (s / r != factor) return 0;
  }
  return factor;
}

}  // namespace

double l1_norm(const PiecewiseField& f) {
  const BoxDomain& d = f.domain();
  std::vector<double> parts(d.cell_count());
  for (std::size_t i = 0; i < parts.size(); ++i)
    parts[i] = cell_abs_integral(d, i, f.value(i), f.gradient(i), f.hessian(i));
  return pairwise_sum(parts);
}

double l1_distance(const PiecewiseField& f, const PiecewiseField& g) {
  if (f.value_shape() != g.value_shape()) throw ValidationError("l1_distance: value shape mismatch");
  if (f.domain().dim() != g.domain().dim()) throw ValidationError("l1_distance: dimension mismatch");
  if (f.domain() == g.domain()) return l1_norm(subtract(f, g));
  if (int k = refinement_factor(f.domain(), g.domain()); k > 0) return l1_norm(subtract(refine(f, k), g));
  if (int k = refinement_factor(g.domain(), f.domain()); k > 0) return l1_norm(subtract(f, refine(g, k)));
  throw ValidationError("l1_distance: grids are not nested");
}

// ------------------------------------------------------------- boundaries

std::vector<BoundaryTrace> trace_boundary(const PiecewiseField& u) {
  const BoxDomain& d = u.domain();
  const int n = d.dim();
  std::vector<BoundaryTrace> out;
  for (int axis = 0; axis < n; ++axis) {
    for (int side = 0; side < 2; ++side) {
      for (std::size_t cell = 0; cell < d.cell_count(); ++cell) {
        const auto m = d.multi_index(cell);
        const int want = side ? d.resolution()[axis] - 1 : 0;
        if (m[axis] != want) continue;
        BoundaryTrace t;
        t.axis = axis;
        t.upper_side = side == 1;
        t.cell = cell;
        t.extent = facet_extent(d, cell, axis, side == 1);
        t.centroid = t.extent.center();
        t.area = facet_area(d, axis);
        t.value = u.eval(cell, t.centroid);
        JumpFacet tmp = make_facet(d, axis, -1, static_cast<std::ptrdiff_t>(cell), true, t.extent);
        const CellPoly p = poly_of(u, nullptr, cell);
        const Point c = d.cell_center(cell);
        set_jump(tmp, &p, &c, &tmp.centroid, nullptr, nullptr, u.value_shape(), n);
        t.mean_value = tmp.mean_jump();
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

Tensor weak_star_pairing(const PiecewiseField& u, const std::function<double(const Point&)>& phi, int phi_degree) {
  const BoxDomain& d = u.domain();
  const int pts = std::max(1, (phi_degree + u.degree()) / 2 + 1);
  const std::size_t m = shape_size(u.value_shape());
  std::vector<std::vector<double>> parts(m, std::vector<double>(d.cell_count()));
  for (std::size_t cell = 0; cell < d.cell_count(); ++cell) {
    const Box box = d.cell_box(cell);
    for (std::size_t comp = 0; comp < m; ++comp) {
      parts[comp][cell] = integrate_box(box, pts, [&](const Point& y) {
        return phi(y) * u.eval(cell, y)[comp];
      });
    }
  }
  Tensor r(u.value_shape());
  for (std::size_t comp = 0; comp < m; ++comp) r[comp] = pairwise_sum(parts[comp]);
  return r;
}

std::vector<std::function<double(const Point&)>> monomial_battery(int dim) {
  std::vector<std::function<double(const Point&)>> out;
  out.emplace_back([](const Point&) { return 1.0; });
  for (int i = 0; i < dim; ++i) out.emplace_back([i](const Point& y) { return y[i]; });
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) out.emplace_back([i, j](const Point& y) { return y[i] * y[j]; });
  return out;
}

Tensor gauss_green_residual(const PiecewiseField& u, const BoundaryCondition& bc) {
  const BoxDomain& d = u.domain();
  const int n = d.dim();
  const PiecewiseField* b = datum_of(u, bc);
  Tensor r(u.gradient_shape());
  for (std::size_t cell = 0; cell < d.cell_count(); ++cell) {
    const CellPoly p = poly_of(u, b, cell);
    r += d.cell_volume() * p.p;
  }
  auto add_facets = [&](const std::vector<JumpFacet>& facets) {
    for (const JumpFacet& f : facets) r += f.area * outer(f.mean_jump(), f.normal);
  };
  add_facets(interior_facets(u, b, -1.0));
  add_facets(boundary_facets(u, bc, -1.0));
  // free faces: subtract the flux ∫ v ⊗ n
  for (int axis = 0; axis < n; ++axis) {
    if (bc.modes[axis] != BoundaryMode::none) continue;
    for (std::size_t cell = 0; cell < d.cell_count(); ++cell) {
      const auto m = d.multi_index(cell);
      const CellPoly p = poly_of(u, b, cell);
      const Point c = d.cell_center(cell);
      for (int side = 0; side < 2; ++side) {
        if (m[axis] != (side ? d.resolution()[axis] - 1 : 0)) continue;
        JumpFacet tmp = make_facet(d, axis, -1, static_cast<std::ptrdiff_t>(cell), true,
                                   facet_extent(d, cell, axis, side == 1));
        set_jump(tmp, &p, &c, &tmp.centroid, nullptr, nullptr, u.value_shape(), n);
        Point nrm(n, 0.0);
        nrm[axis] = side ? 1.0 : -1.0;
        r -= tmp.area * outer(tmp.mean_jump(), nrm);
      }
    }
  }
  return r;
}

Tensor gauss_green_residual(const PiecewiseField& u) {
  return gauss_green_residual(u, BoundaryCondition::free(u.domain().dim()));
}

// ------------------------------------------------------------ transforms

PiecewiseField refine(const PiecewiseField& u, int factor) {
  const BoxDomain fine = u.domain().refined(factor);
  PiecewiseField r(fine, u.value_shape());
  const int n = fine.dim();
  for (std::size_t cell = 0; cell < fine.cell_count(); ++cell) {
    auto m = fine.multi_index(cell);
    for (int k = 0; k < n; ++k) m[k] /= factor;
    const std::size_t parent = u.domain().cell_index(m);
    const Point c = fine.cell_center(cell);
    r.set_value(cell, u.eval(parent, c));
    r.set_gradient(cell, u.gradient_at(parent, c));
    r.set_hessian(cell, u.hessian(parent));
  }
  return r;
}

PiecewiseField restrict_to(const PiecewiseField& u, std::span<const int> lo, std::span<const int> hi) {
  const BoxDomain& d = u.domain();
  const int n = d.dim();
  Point lower(n), upper(n);
  std::vector<int> res(n);
  for (int k = 0; k < n; ++k) {
    if (lo[k] < 0 || hi[k] > d.resolution()[k] || hi[k] <= lo[k])
      throw ValidationError("restrict_to: empty or out-of-range block");
    lower[k] = d.lower()[k] + lo[k] * d.cell_width(k);
    upper[k] = d.lower()[k] + hi[k] * d.cell_width(k);
    res[k] = hi[k] - lo[k];
  }
  PiecewiseField r(BoxDomain(lower, upper, res), u.value_shape());
  for (std::size_t cell = 0; cell < r.cell_count(); ++cell) {
    auto m = r.domain().multi_index(cell);
    for (int k = 0; k < n; ++k) m[k] += lo[k];
    const std::size_t src = d.cell_index(m);
    r.set_value(cell, u.value(src));
    r.set_gradient(cell, u.gradient(src));
    r.set_hessian(cell, u.hessian(src));
  }
  return r;
}

namespace {

PiecewiseField combine(const PiecewiseField& u, const PiecewiseField& w, double sign) {
  if (!(u.domain() == w.domain()) || u.value_shape() != w.value_shape())
    throw ValidationError("field arithmetic needs identical grids and shapes");
  PiecewiseField r = u;
  for (std::size_t i = 0; i < u.cell_count(); ++i) {
    r.set_value(i, u.value(i) + sign * w.value(i));
    r.set_gradient(i, u.gradient(i) + sign * w.gradient(i));
    r.set_hessian(i, u.hessian(i) + sign * w.hessian(i));
  }
  return r;
}

}  // namespace

PiecewiseField subtract(const PiecewiseField& u, const PiecewiseField& w) { return combine(u, w, -1.0); }
PiecewiseField add(const PiecewiseField& u, const PiecewiseField& w) { return combine(u, w, 1.0); }

// ------------------------------------------------------------------ json

nlohmann::json to_json(const BoxDomain& d) {
  return {{"lower", d.lower()}, {"upper", d.upper()}, {"resolution", d.resolution()}};
}

BoxDomain domain_from_json(const nlohmann::json& j) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "lower" && it.key() != "upper" && it.key() != "resolution")
      throw ValidationError("domain: unknown key '" + it.key() + "'");
  return BoxDomain(j.at("lower").get<Point>(), j.at("upper").get<Point>(),
                   j.at("resolution").get<std::vector<int>>());
}

nlohmann::json to_json(const PiecewiseField& f) {
  nlohmann::json values = nlohmann::json::array();
  nlohmann::json grads = nlohmann::json::array();
  nlohmann::json hess = nlohmann::json::array();
  const int deg = f.degree();
  for (std::size_t i = 0; i < f.cell_count(); ++i) {
    values.push_back(std::vector<double>(f.value(i).data().begin(), f.value(i).data().end()));
    if (deg >= 1) grads.push_back(std::vector<double>(f.gradient(i).data().begin(), f.gradient(i).data().end()));
    if (deg >= 2) hess.push_back(std::vector<double>(f.hessian(i).data().begin(), f.hessian(i).data().end()));
  }
  nlohmann::json j{{"domain", to_json(f.domain())}, {"value_shape", f.value_shape()}, {"values", values}};
  if (deg >= 1) j["gradients"] = grads;
  if (deg >= 2) j["hessians"] = hess;
  return j;
}

PiecewiseField field_from_json(const nlohmann::json& j) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k != "domain" && k != "value_shape" && k != "values" && k != "gradients" && k != "hessians")
      throw ValidationError("field: unknown key '" + k + "'");
  }
  PiecewiseField f(domain_from_json(j.at("domain")), j.at("value_shape").get<Shape>());
  const auto& values = j.at("values");
  if (values.size() != f.cell_count()) throw ValidationError("field: wrong number of cell values");
  for (std::size_t i = 0; i < f.cell_count(); ++i) {
    f.set_value(i, Tensor(f.value_shape(), values[i].get<std::vector<double>>()));
    if (j.contains("gradients"))
      f.set_gradient(i, Tensor(f.gradient_shape(), j["gradients"].at(i).get<std::vector<double>>()));
    if (j.contains("hessians"))
      f.set_hessian(i, Tensor(f.hessian_shape(), j["hessians"].at(i).get<std::vector<double>>()));
  }
  return f;
}

nlohmann::json to_json(const JumpFacet& f) {
  return {{"axis", f.axis},
          {"boundary", f.boundary},
          {"centroid", f.centroid},
          {"normal", f.normal},
          {"area", f.area},
          {"jump", std::vector<double>(f.jump.data().begin(), f.jump.data().end())}};
}

}  // namespace sd2
