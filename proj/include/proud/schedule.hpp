#ifndef PROUD_SCHEDULE_HPP_
#define PROUD_SCHEDULE_HPP_

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace proud {

/// Diffusion noise schedule. Step indices are 1-based (t = 1..T), matching the
/// reverse loop which runs t = T down to 1; storage is 0-based.
struct NoiseSchedule {
  std::vector<double> betas;       // strictly increasing, in (0,1)
  std::vector<double> alphas_bar;  // cumulative products of (1 - beta)
  std::vector<double> step_sizes;  // Langevin step eta_t > 0

  int steps() const noexcept { return static_cast<int>(betas.size()); }

  double beta(int t) const { return betas.at(index(t)); }
  double alpha_bar(int t) const { return alphas_bar.at(index(t)); }
  double step_size(int t) const { return step_sizes.at(index(t)); }

  /// Builds a schedule from explicit betas; eta_t = step_scale * (1 - alpha_bar_t).
  static NoiseSchedule from_betas(std::vector<double> betas, double step_scale) {
    if (betas.empty()) throw std::invalid_argument("schedule needs at least one step");
    if (!(step_scale > 0.0) || !std::isfinite(step_scale)) throw std::invalid_argument("step_scale must be > 0");
    for (std::size_t i = 0; i < betas.size(); ++i) {
      if (!(betas[i] > 0.0 && betas[i] < 1.0)) throw std::invalid_argument("betas must lie in (0,1)");
      if (i > 0 && !(betas[i] > betas[i - 1])) throw std::invalid_argument("betas must be strictly increasing");
    }
    NoiseSchedule s;
    s.betas = std::move(betas);
    s.alphas_bar.resize(s.betas.size());
    s.step_sizes.resize(s.betas.size());
    double prod = 1.0;
    for (std::size_t i = 0; i < s.betas.size(); ++i) {
      prod *= 1.0 - s.betas[i];
      s.alphas_bar[i] = prod;
      s.step_sizes[i] = step_scale * (1.0 - prod);
    }
    return s;
  }

 private:
  int index(int t) const {
    if (t < 1 || t > steps()) {
      throw std::out_of_range("step index " + std::to_string(t) + " outside 1.." + std::to_string(steps()));
    }
    return t - 1;
  }
};

/// Linear beta ramp from beta_min (t=1) to beta_max (t=T).
inline NoiseSchedule make_linear_schedule(int T, double beta_min, double beta_max, double step_scale) {
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (!(beta_min > 0.0) || !(beta_max < 1.0) || !(beta_min <= beta_max)) {
    throw std::invalid_argument("need 0 < beta_min <= beta_max < 1");
  }
  if (T > 1 && !(beta_min < beta_max)) throw std::invalid_argument("need beta_min < beta_max when T > 1");
  std::vector<double> betas(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(T - 1);
    betas[static_cast<std::size_t>(i)] = beta_min + (beta_max - beta_min) * frac;
  }
  return NoiseSchedule::from_betas(std::move(betas), step_scale);
}

}  // namespace proud

#endif  // PROUD_SCHEDULE_HPP_
