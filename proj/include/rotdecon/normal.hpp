#pragma once

namespace rotdecon {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double norm_logpdf(double z);
double norm_cdf(double z);
double norm_sf(double z);

/// log Phi(z), accurate far into the lower tail.
double norm_logcdf(double z);
double norm_logsf(double z);

/// log(Phi(b) - Phi(a)) for a <= b; -inf when a == b. Infinite endpoints allowed.
double norm_log_diff_cdf(double a, double b);

/// Phi^{-1}(p) for p in (0,1). Throws DomainError otherwise.
double norm_quantile(double p);

/// z with Phi(z) = exp(log_p), usable when p underflows.
double norm_quantile_logp(double log_p);

/// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b);

}  // namespace rotdecon
