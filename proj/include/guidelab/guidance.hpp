#pragma once

#include "guidelab/core.hpp"
#include "guidelab/models.hpp"
#include "guidelab/random.hpp"
#include "guidelab/schedule.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace guidelab {

enum class GuidanceKind { none, adm_g, geoguide, geoguide_scaled };

inline const char* to_string(GuidanceKind kind) {
  switch (kind) {
    case GuidanceKind::none: return "none";
    case GuidanceKind::adm_g: return "adm_g";
    case GuidanceKind::geoguide: return "geoguide";
    case GuidanceKind::geoguide_scaled: return "geoguide_scaled";
  }
  return "none";
}

inline std::optional<GuidanceKind> parse_guidance_kind(const std::string& name) {
  if (name == "none") return GuidanceKind::none;
  if (name == "adm_g" || name == "adm-g") return GuidanceKind::adm_g;
  if (name == "geoguide") return GuidanceKind::geoguide;
  if (name == "geoguide_scaled" || name == "geoguide-scaled") return GuidanceKind::geoguide_scaled;
  return std::nullopt;
}

struct GuidanceRule {
  GuidanceKind kind = GuidanceKind::none;
  double scale = 0.0;
  /// Fraction of the initial reverse steps (counted from t = T down) with guidance on.
  double cutoff_fraction = 1.0;
  double eps_norm = 1e-12;
  /// Replaces the executed step count in sqrt(D)/T when positive.
  int geoguide_steps = 0;

  void validate() const {
    require(scale >= 0.0 && std::isfinite(scale), "guidance: scale must be finite and nonnegative");
    require(cutoff_fraction >= 0.0 && cutoff_fraction <= 1.0, "guidance: cutoff fraction must lie in [0, 1]");
    require(eps_norm > 0.0, "guidance: eps_norm must be positive");
    require(geoguide_steps >= 0, "guidance: geoguide_steps must be nonnegative");
  }

  bool needs_classifier() const { return kind != GuidanceKind::none; }

  /// Number of leading reverse steps during which the rule may act.
  int active_steps(int total_steps) const {
    const double raw = cutoff_fraction * static_cast<double>(total_steps);
    return static_cast<int>(std::ceil(raw - 1e-9));
  }

  bool is_active(int step_index, int total_steps) const { return step_index < active_steps(total_steps); }
};

/// Everything the rule needs to know about the current reverse step.
struct StepContext {
  int k = 0;           // step of the sampling schedule, steps()..1
  int step_index = 0;  // executed steps before this one, 0 at k = steps()
  int total_steps = 0;
  int y = 0;
};

struct Adjustment {
  Vector A;
  bool active = false;
  double logp = 0.0;
};

/// A_t from an already evaluated classifier gradient at step ctx.k.
inline Adjustment adjustment_from_gradient(const GuidanceRule& rule, const ClassGradient& g, const StepContext& ctx,
                                           const NoiseSchedule& schedule) {
  Adjustment out;
  out.logp = g.logp;
  out.A = Vector::Zero(g.direction.size());
  if (rule.kind == GuidanceKind::none || !rule.is_active(ctx.step_index, ctx.total_steps)) return out;
  if (!g.direction.allFinite() || std::isnan(g.log_scale) || std::isnan(g.logp)) {
    throw NumericError("guidance: non-finite classifier gradient at t=" + std::to_string(schedule.timestep(ctx.k)) +
                       ", y=" + std::to_string(ctx.y));
  }
  if (rule.kind == GuidanceKind::adm_g) {
    out.A = schedule.gamma(ctx.k) * g.gradient();
    out.active = true;
    return out;
  }
  // Normalizing the rescaled direction gives the same unit vector as the raw
  // gradient; the threshold is applied after rescaling (see ClassGradient).
  const double norm = g.direction.norm();
  if (norm < rule.eps_norm) return out;
  const int steps = rule.geoguide_steps > 0 ? rule.geoguide_steps : ctx.total_steps;
  double magnitude = std::sqrt(static_cast<double>(g.direction.size())) / steps;
  if (rule.kind == GuidanceKind::geoguide_scaled) magnitude *= std::sqrt(1.0 - schedule.alpha_bar(ctx.k));
  out.A = (magnitude / norm) * g.direction;
  out.active = true;
  return out;
}

/// A_t for one rule. Classifiers are queried at the parent timestep of step k.
inline Adjustment adjustment(const GuidanceRule& rule, const ClassifierModel* classifier, const Vector& x_t,
                             const StepContext& ctx, const NoiseSchedule& schedule) {
  if (rule.kind == GuidanceKind::none || !rule.is_active(ctx.step_index, ctx.total_steps)) {
    return {Vector::Zero(x_t.size()), false, 0.0};
  }
  require(classifier != nullptr, "guidance: rule needs a classifier");
  return adjustment_from_gradient(rule, classifier->class_grad(x_t, schedule.timestep(ctx.k), ctx.y), ctx, schedule);
}

/// mu + sqrt(gamma) eps + s A with the noise supplied by the caller.
inline Vector guided_reverse_step(const Vector& mu, double gamma, const Vector& A, double s, const Vector& eps,
                                  bool is_final) {
  require(gamma >= 0.0, "reverse step: gamma must be nonnegative");
  Vector x = mu;
  if (!is_final) x += std::sqrt(gamma) * eps;
  if (s != 0.0) x += s * A;
  return x;
}

/// The final step adds no noise and draws nothing from rng.
inline Vector guided_reverse_step(const Vector& mu, double gamma, const Vector& A, double s, RandomStream& rng,
                                  bool is_final) {
  if (is_final) return guided_reverse_step(mu, gamma, A, s, Vector::Zero(mu.size()), true);
  return guided_reverse_step(mu, gamma, A, s, rng.normal_vector(mu.size()), false);
}

}  // namespace guidelab
