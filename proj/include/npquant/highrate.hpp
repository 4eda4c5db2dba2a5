#pragma once

#include <cstdint>
#include <vector>

#include "npquant/grid.hpp"
#include "npquant/processes.hpp"

namespace npquant {

// single-sample marginal under hyp evaluated on the grid, normalized
DensityField marginal_density_field(const ProcessModel& model, Hypothesis hyp,
                                    const RegularGrid& grid);

// Monte-Carlo score field: at each node y,
//   Fbar_k(y) = (1/n_mc) sum_j ||grad_{y0} log(p0/p1)(Y_{-k:-1}(j), y, Y_{1:k}(j))||^2
// with the side windows drawn i.i.d. from the H0 marginal, shared across
// nodes. Also accumulates the per-node second-moment matrices of the gradient
// for non-isotropic covariation profiles. Paper defaults: k=3, n_mc=1000.
ScoreBundle estimate_Fbar(const ProcessModel& model, const RegularGrid& grid, int k, int n_mc,
                          std::uint64_t seed);

// F = nu * Fbar for isotropic profiles; F(y) = trace(M(y) Lbar(y)) otherwise.
ScoreField compute_F(const ScoreBundle& bundle, const CovariationProfile& profile);

// D_e = 1/2 * integral of p0 F / zeta^(2/d). Nodes where zeta vanishes but
// p0*F > 0 make the loss infinite; they are reported through degenerate_nodes
// when given, and the returned value is +inf.
double compute_De(const DensityField& p0, const ScoreField& f, const DensityField& zeta,
                  int d, std::vector<std::size_t>* degenerate_nodes = nullptr);

DensityField optimal_density_scalar(const DensityField& p0, const ScoreField& f);
DensityField optimal_density_vector(const DensityField& p0, const ScoreField& f, int d);

// 1/2 * (integral of (p0 F)^(d/(d+2)))^((d+2)/d); equals D_e at the optimal zeta
double holder_lower_bound(const DensityField& p0, const ScoreField& f, int d);

// MSE-optimal (Bennett) point density p0^(d/(d+2)), normalized
DensityField bennett_mse_density(const DensityField& p0, int d);

// raises isolated zeros of a density to rel_floor x peak and renormalizes;
// companders need strictly positive targets and optimal densities can touch
// zero where the score vanishes
DensityField floored_positive(DensityField field, double rel_floor = 1e-12);

// LBG target q* = p0 * Fbar, normalized
DensityField target_density_qstar(const DensityField& p0, const ScoreField& fbar);

struct EllipsoidAlignment {
  Matrix rotation;       // column i = eigenvector of the (d-i+1)-th eigenvalue of Lbar
  double attained = 0.0; // sum_i phi_i * lambda_{d-i+1}
};

// Minimizes trace(U Phi U^T Lbar) over orthogonal U for fixed ascending
// ellipsoid moments phi: the cell axes align with Lbar's eigenvectors in
// reverse eigenvalue order.
EllipsoidAlignment ellipsoid_alignment(const std::vector<double>& phi, const Matrix& lbar);

// i.i.d. specialization: F(y) = grad(Lambda)^T M(y) grad(Lambda),
// Lambda = log(p0/p1), gradients by central differences on the grid
ScoreField gupta_hero_F(const DensityField& p0, const DensityField& p1,
                        const CovariationProfile& profile);

}  // namespace npquant
