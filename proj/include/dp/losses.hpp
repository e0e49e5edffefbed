#pragma once

#include "dp/emd.hpp"
#include "dp/tensor.hpp"

namespace dp {

/// Weights of the reconstruction terms in the generator objective.
struct LossWeights {
  double lambda_cf = 100.0;
  double lambda_emd = 1.0;
};

/// Least-squares GAN targets: 1 for real pairs, 0 for fakes.
/// Returns (L_D, L_G_adv) with L_D = 0.5[(s_real-1)^2 + s_fake^2] and
/// L_G_adv = (s_fake-1)^2.
std::pair<double, double> gan_losses(double score_real, double score_fake);

/// L_G_adv + lambda_cf * cd + lambda_emd * emd.
double generator_total_loss(double l_g_adv, double cd, double emd, const LossWeights& w);

// Tape-level counterparts used during training. The Chamfer and EMD nodes run
// their combinatorial solvers outside the tape and differentiate with the
// resulting assignments held fixed.

Tensor chamfer_loss_node(Tape& tape, Tensor pred_xyz, const PointCloud& ref);

Tensor emd_loss_node(Tape& tape, Tensor pred_xyz, const PointCloud& ref,
                     std::size_t exact_max_n = 256);

Tensor lsgan_d_loss_node(Tape& tape, Tensor score_real, Tensor score_fake);

Tensor lsgan_g_adv_node(Tape& tape, Tensor score_fake);

Tensor generator_total_loss_node(Tape& tape, Tensor l_g_adv, Tensor cd, Tensor emd,
                                 const LossWeights& w);

}  // namespace dp
