#include "losp/phase.hpp"

#include "losp/rng.hpp"

#include <cmath>
#include <string>

namespace losp {

double RegionPhase::coeff(int shot, int l, int k) const { return coeffs.at(shot).at(PhaseSpec::coeff_index(l, k)); }

double &RegionPhase::coeff(int shot, int l, int k) { return coeffs.at(shot).at(PhaseSpec::coeff_index(l, k)); }

RegionPhase const *PhaseSpec::find(int region_id) const
{
  for (auto const &r : regions) {
    if (r.region_id == region_id) {
      return &r;
    }
  }
  return nullptr;
}

void PhaseSpec::validate() const
{
  if (n_shots < 1) {
    throw ConfigError("phase spec needs at least one shot");
  }
  for (auto const &r : regions) {
    if (r.order < 0) {
      throw ConfigError("polynomial order must be non-negative");
    }
    if (static_cast<int>(r.coeffs.size()) != n_shots) {
      throw ConfigError("region " + std::to_string(r.region_id) + " needs one coefficient set per shot");
    }
    for (auto const &c : r.coeffs) {
      if (c.size() != coeff_count(r.order)) {
        throw ConfigError("region " + std::to_string(r.region_id) + " has a wrong coefficient count");
      }
    }
  }
}

PhaseSpec sample_phase_spec(Phantom const &phantom, int n_shots, PhaseSampling const &sampling, std::uint64_t seed)
{
  if (n_shots < 1) {
    throw ConfigError("n_shots must be >= 1");
  }
  if (!(sampling.coeff_scale >= 0)) {
    throw ConfigError("coeff_scale must be non-negative");
  }
  auto check = [](OrderRange r) {
    if (r.first < 0 || r.first > r.second) {
      throw ConfigError("order range must satisfy 0 <= min <= max");
    }
  };
  check(sampling.order_range);
  for (auto const &[id, r] : sampling.overrides) {
    check(r);
  }

  Rng rng(derive_seed(seed, 0x50484153));  // "PHAS"
  PhaseSpec spec;
  spec.n_shots = n_shots;
  for (auto const &region : phantom.regions) {
    OrderRange range = sampling.order_range;
    if (auto it = sampling.overrides.find(region.id); it != sampling.overrides.end()) {
      range = it->second;
    }
    RegionPhase rp;
    rp.region_id = region.id;
    rp.order = std::uniform_int_distribution<int>(range.first, range.second)(rng);
    rp.coeffs.assign(n_shots, std::vector<double>(PhaseSpec::coeff_count(rp.order), 0.0));
    for (int j = 0; j < n_shots; ++j) {
      for (auto &c : rp.coeffs[j]) {
        c = sampling.coeff_scale > 0 ? uniform(rng, -sampling.coeff_scale, sampling.coeff_scale) : 0.0;
      }
      if (j == 0 && sampling.zero_first_shot) {
        std::fill(rp.coeffs[0].begin(), rp.coeffs[0].end(), 0.0);
      }
    }
    spec.regions.push_back(std::move(rp));
  }
  return spec;
}

namespace {

double normalized_coord(Eigen::Index i, Eigen::Index n) { return n > 1 ? 2.0 * i / (n - 1) - 1.0 : 0.0; }

double polynomial(std::vector<double> const &c, int order, double x, double y)
{
  // Σ_l Σ_k A_lk x^k y^(l-k)
  double sum = 0;
  for (int l = 0; l <= order; ++l) {
    double xk = 1;
    for (int k = 0; k <= l; ++k) {
      double const ypow = std::pow(y, l - k);
      sum += c[PhaseSpec::coeff_index(l, k)] * xk * ypow;
      xk *= x;
    }
  }
  return sum;
}

} // namespace

RealImage render_shot_phase(PhaseSpec const &spec, Phantom const &phantom, int shot)
{
  spec.validate();
  if (shot < 0 || shot >= spec.n_shots) {
    throw ConfigError("shot index out of range");
  }
  RealImage phase = RealImage::Zero(phantom.size_ro, phantom.size_pe);
  for (auto const &rp : spec.regions) {
    auto const *region = phantom.find(rp.region_id);
    if (!region) {
      throw ConfigError("phase spec region " + std::to_string(rp.region_id) + " is absent from the phantom");
    }
    auto const &c = rp.coeffs[shot];
    for (Eigen::Index j = 0; j < phase.cols(); ++j) {
      double const y = normalized_coord(j, phase.cols());
      for (Eigen::Index i = 0; i < phase.rows(); ++i) {
        if (region->mask(i, j)) {
          phase(i, j) = polynomial(c, rp.order, normalized_coord(i, phase.rows()), y);
        }
      }
    }
  }
  return phase;
}

ShotArray apply_phase(RealImage const &magnitude, Phantom const &phantom, PhaseSpec const &spec)
{
  ShotArray shots;
  shots.reserve(spec.n_shots);
  for (int j = 0; j < spec.n_shots; ++j) {
    RealImage const phi = render_shot_phase(spec, phantom, j);
    CxImage s(phi.rows(), phi.cols());
    for (Eigen::Index k = 0; k < phi.size(); ++k) {
      s(k) = std::polar(magnitude(k), phi(k));
    }
    shots.push_back(std::move(s));
  }
  return shots;
}

ShotArray apply_phase(Phantom const &phantom, PhaseSpec const &spec)
{
  return apply_phase(phantom.magnitude, phantom, spec);
}

void to_json(nlohmann::json &j, PhaseSpec const &spec)
{
  j = nlohmann::json::object();
  j["n_shots"] = spec.n_shots;
  auto regions = nlohmann::json::array();
  for (auto const &r : spec.regions) {
    regions.push_back({{"region", r.region_id}, {"order", r.order}, {"coeffs", r.coeffs}});
  }
  j["regions"] = std::move(regions);
}

void from_json(nlohmann::json const &j, PhaseSpec &spec)
{
  try {
    spec = PhaseSpec{};
    spec.n_shots = j.at("n_shots").get<int>();
    for (auto const &r : j.at("regions")) {
      RegionPhase rp;
      rp.region_id = r.at("region").get<int>();
      rp.order = r.at("order").get<int>();
      rp.coeffs = r.at("coeffs").get<std::vector<std::vector<double>>>();
      spec.regions.push_back(std::move(rp));
    }
  } catch (nlohmann::json::exception const &e) {
    throw ConfigError(std::string("malformed phase spec: ") + e.what());
  }
  spec.validate();
}

} // namespace losp
