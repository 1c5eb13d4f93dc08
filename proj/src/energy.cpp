#include "sd2/energy.hpp"

#include "sd2/errors.hpp"
#include "sd2/parallel.hpp"

namespace sd2 {

nlohmann::json EnergyBreakdown::to_json() const {
  return {{"bulk", bulk},
          {"jump1", jump1},
          {"jump2", jump2},
          {"total", total},
          {"quadrature",
           {{"bulk", "cell midpoint"},
            {"jumps", "exact for constant jumps, 8-point Gauss-Legendre per facet axis otherwise"},
            {"cells", cells},
            {"facets_u", facets1},
            {"facets_grad", facets2}}}};
}

double interfacial_energy(std::span<const JumpFacet> facets, const InterfacialDensity& psi, int threads) {
  std::vector<double> parts(facets.size());
  parallel_for(facets.size(), threads, [&](std::size_t i) {
    const JumpFacet& f = facets[i];
    if (psi.abs_linear && !psi.x_dependent) {
      parts[i] = integrate_abs_linear_over_facet(f, psi.abs_linear(f.normal));
    } else {
      parts[i] = integrate_over_facet(f, [&](const Tensor& j, const Point&) { return psi(f.centroid, j, f.normal); });
    }
  });
  return pairwise_sum(parts);
}

EnergyBreakdown total_energy(const PiecewiseField& u, const DensityTriple& dens, const EnergyOptions& opts) {
  const BoxDomain& dom = u.domain();
  if (u.value_shape() != Shape{dens.d} || dom.dim() != dens.N)
    throw ValidationError("total_energy: field shape " + shape_to_string(u.value_shape()) + " on a " +
                          std::to_string(dom.dim()) + "-d grid does not match densities (d=" +
                          std::to_string(dens.d) + ", N=" + std::to_string(dens.N) + ")");
  EnergyBreakdown e;
  e.cells = dom.cell_count();
  std::vector<double> bulk(dom.cell_count());
  const double vol = dom.cell_volume();
  parallel_for(dom.cell_count(), opts.threads, [&](std::size_t c) {
    bulk[c] = vol * dens.W(dom.cell_center(c), u.gradient(c), u.hessian(c));
  });
  e.bulk = pairwise_sum(bulk);

  const auto f1 = opts.u_boundary ? jump_set(u, *opts.u_boundary, opts.jump_tolerance)
                                  : jump_set(u, opts.jump_tolerance);
  const PiecewiseField grad = u.gradient_field();
  std::vector<JumpFacet> f2;
  if (opts.grad_boundary) {
    f2 = jump_set(grad, *opts.grad_boundary, opts.jump_tolerance);
  } else {
    f2 = jump_set(grad, opts.jump_tolerance);
  }
  e.facets1 = f1.size();
  e.facets2 = f2.size();
  e.jump1 = interfacial_energy(f1, dens.psi1, opts.threads);
  e.jump2 = interfacial_energy(f2, dens.psi2, opts.threads);
  e.total = e.bulk + e.jump1 + e.jump2;
  return e;
}

PiecewiseField disarrangement_density(const SD2Triple& sd2) {
  sd2.validate();
  return subtract(sd2.g.gradient_field(), sd2.G);
}

PiecewiseField gradient_disarrangement_density(const SD2Triple& sd2) {
  sd2.validate();
  if (sd2.G.degree() > 1) throw ValidationError("gradient_disarrangement_density: G must be piecewise affine");
  PiecewiseField r(sd2.domain(), sd2.Gamma.value_shape());
  for (std::size_t c = 0; c < r.cell_count(); ++c)
    r.set_value(c, swap_last_two(sd2.G.gradient(c)) - sd2.Gamma.value(c));
  return r;
}

}  // namespace sd2
