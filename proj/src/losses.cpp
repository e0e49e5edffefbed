#include "dp/losses.hpp"

#include "dp/metrics.hpp"

namespace dp {

std::pair<double, double> gan_losses(double score_real, double score_fake) {
  if (!std::isfinite(score_real) || !std::isfinite(score_fake))
    throw NumericalError("gan_losses: non-finite discriminator score");
  const double l_d = 0.5 * ((score_real - 1.0) * (score_real - 1.0) + score_fake * score_fake);
  const double l_g = (score_fake - 1.0) * (score_fake - 1.0);
  return {l_d, l_g};
}

double generator_total_loss(double l_g_adv, double cd, double emd, const LossWeights& w) {
  if (!std::isfinite(l_g_adv) || !std::isfinite(cd) || !std::isfinite(emd))
    throw NumericalError("generator_total_loss: non-finite term");
  return l_g_adv + w.lambda_cf * cd + w.lambda_emd * emd;
}

namespace {

Matrix rows_to_matrix(const std::vector<Vec3>& rows) {
  Matrix m(static_cast<int>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m(static_cast<int>(i), 0) = rows[i].x;
    m(static_cast<int>(i), 1) = rows[i].y;
    m(static_cast<int>(i), 2) = rows[i].z;
  }
  return m;
}

}  // namespace

Tensor chamfer_loss_node(Tape& tape, Tensor pred_xyz, const PointCloud& ref) {
  const PointCloud pred = matrix_to_cloud(tape.value(pred_xyz));
  const double value = chamfer(pred, ref);
  return tape.external_scalar(pred_xyz, value, rows_to_matrix(chamfer_grad(pred, ref)));
}

Tensor emd_loss_node(Tape& tape, Tensor pred_xyz, const PointCloud& ref,
                     std::size_t exact_max_n) {
  const PointCloud pred = matrix_to_cloud(tape.value(pred_xyz));
  const Matching match = emd_match(pred, ref, exact_max_n);
  return tape.external_scalar(pred_xyz, match.mean_cost,
                              rows_to_matrix(emd_grad(pred, ref, match)));
}

Tensor lsgan_d_loss_node(Tape& tape, Tensor score_real, Tensor score_fake) {
  const Tensor real_term = tape.square(tape.add_const(score_real, -1.0));
  const Tensor fake_term = tape.square(score_fake);
  return tape.scale(tape.add(real_term, fake_term), 0.5);
}

Tensor lsgan_g_adv_node(Tape& tape, Tensor score_fake) {
  return tape.square(tape.add_const(score_fake, -1.0));
}

Tensor generator_total_loss_node(Tape& tape, Tensor l_g_adv, Tensor cd, Tensor emd,
                                 const LossWeights& w) {
  return tape.add(l_g_adv,
                  tape.add(tape.scale(cd, w.lambda_cf), tape.scale(emd, w.lambda_emd)));
}

}  // namespace dp
