#include "qrlab/pinball.hpp"

#include <cmath>

#include "qrlab/errors.hpp"

namespace qrlab {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
}

}  // namespace

double pinball_loss(double t, double alpha) {
  check_alpha(alpha);
  return t > 0.0 ? alpha * t : -(1.0 - alpha) * t;
}

double pinball_subgrad(double t, double alpha) { return t > 0.0 ? alpha : -(1.0 - alpha); }

void PinballParams::validate() const {
  check_alpha(alpha);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("Moreau envelope scale must be positive");
  }
}

double prox(double x, const PinballParams& p) {
  p.validate();
  if (x > p.band_hi()) return x - p.alpha * p.lambda;
  if (x < p.band_lo()) return x + (1.0 - p.alpha) * p.lambda;
  return p.b;
}

ProxState envelope(double x, const PinballParams& p) {
  ProxState s;
  s.prox = prox(x, p);
  s.in_band = s.prox == p.b;
  if (x > p.band_hi()) {
    s.d_x = p.alpha;
  } else if (x < p.band_lo()) {
    s.d_x = -(1.0 - p.alpha);
  } else {
    s.d_x = (x - p.b) / p.lambda;
  }
  const double gap = x - s.prox;
  s.envelope = gap * gap / (2.0 * p.lambda) + pinball_loss(s.prox - p.b, p.alpha);
  s.d_lambda = -0.5 * s.d_x * s.d_x;
  s.d_b = -s.d_x;
  return s;
}

EnvelopeSecondDerivs envelope_second_derivs(double x, const PinballParams& p) {
  const ProxState s = envelope(x, p);
  EnvelopeSecondDerivs out;
  out.dxx = s.in_band ? 1.0 / p.lambda : 0.0;
  out.dbx = -out.dxx;
  out.dlx = -s.d_x * out.dxx;
  return out;
}

}  // namespace qrlab
