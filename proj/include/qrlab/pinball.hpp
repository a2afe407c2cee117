#pragma once

namespace qrlab {

/// Pinball loss l^alpha(t): alpha*t for t > 0, -(1-alpha)*t for t <= 0.
double pinball_loss(double t, double alpha);

/// Subgradient of the pinball loss; -(1-alpha) is selected at the kink.
double pinball_subgrad(double t, double alpha);

/// Shifted pinball loss l_b(x) = l^alpha(x - b) with Moreau scale lambda.
struct PinballParams {
  double alpha = 0.5;
  double b = 0.0;
  double lambda = 1.0;

  /// Throws DomainError unless 0 < alpha < 1 and lambda > 0.
  void validate() const;
  double band_lo() const { return b - (1.0 - alpha) * lambda; }
  double band_hi() const { return b + alpha * lambda; }
};

/// Moreau envelope of the shifted loss at a point, with first derivatives.
struct ProxState {
  double prox = 0.0;
  double envelope = 0.0;
  double d_x = 0.0;
  double d_lambda = 0.0;
  double d_b = 0.0;
  /// x lies in the closed band [b-(1-alpha)lambda, b+alpha*lambda], so prox = b.
  bool in_band = false;
};

/// Weak second derivatives of the envelope.
struct EnvelopeSecondDerivs {
  double dxx = 0.0;
  double dbx = 0.0;
  double dlx = 0.0;
};

double prox(double x, const PinballParams& p);
ProxState envelope(double x, const PinballParams& p);
EnvelopeSecondDerivs envelope_second_derivs(double x, const PinballParams& p);

}  // namespace qrlab
