#include "cuspidal/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cuspidal {

void BundleData::validate() const {
  if (f < 0 || b < 0) throw SchemaError("bundle: f and b must be nonnegative");
  if (h.size() != static_cast<std::size_t>(b + 1))
    throw SchemaError("bundle: h must have b+1 rows");
  for (const auto& row : h) {
    if (row.size() != static_cast<std::size_t>(f + 1))
      throw SchemaError("bundle: h rows must have f+1 entries");
    for (int v : row)
      if (v < 0) throw SchemaError("bundle: h entries must be nonnegative");
  }
  for (const auto& [key, list] : nu_lists) {
    auto [r, s] = key;
    if (r < 0 || r > b || s < 0 || s > f) throw SchemaError("bundle: nu list bidegree out of range");
    double prev = 0.0;
    for (const auto& e : list) {
      if (e.nu <= 0.0) throw SchemaError("bundle: nu values must be strictly positive");
      if (e.nu <= prev) throw SchemaError("bundle: nu lists must be strictly ascending");
      if (e.mult <= 0) throw SchemaError("bundle: nu multiplicities must be positive");
      prev = e.nu;
    }
  }
  for (const auto& [key, sign] : star_signs)
    if (sign != 1 && sign != -1) throw SchemaError("bundle: star signs must be +/-1");
}

bool BundleData::poincare_symmetric() const {
  for (int r = 0; r <= b; ++r)
    for (int s = 0; s <= f; ++s)
      if (dim_h(r, s) != dim_h(b - r, f - s)) return false;
  return true;
}

Channel BundleData::make_channel(int r, int s, double nu, int mult, bool normal) const {
  Channel c;
  c.r = r;
  c.s = s;
  c.nu = nu;
  c.mult = mult;
  c.normal = normal;
  c.a = 0.5 * f - s;
  c.d = std::abs(c.a);
  c.theta = nu + c.d * c.d;
  return c;
}

std::vector<Channel> channels_for_degree(const BundleData& bundle, int p, bool include_nonzero_nu) {
  std::vector<Channel> out;
  auto collect = [&](bool normal) {
    const int sum = normal ? p - 1 : p;
    std::vector<Channel> block;
    for (int s = 0; s <= bundle.f; ++s) {
      const int r = sum - s;
      if (r < 0 || r > bundle.b) continue;
      const int m = bundle.dim_h(r, s);
      if (m > 0) block.push_back(bundle.make_channel(r, s, 0.0, m, normal));
      if (include_nonzero_nu) {
        auto it = bundle.nu_lists.find({r, s});
        if (it != bundle.nu_lists.end())
          for (const auto& e : it->second)
            block.push_back(bundle.make_channel(r, s, e.nu, e.mult, normal));
      }
    }
    std::stable_sort(block.begin(), block.end(), [](const Channel& x, const Channel& y) {
      if (x.s != y.s) return x.s < y.s;
      if (x.r != y.r) return x.r < y.r;
      return x.nu < y.nu;
    });
    out.insert(out.end(), block.begin(), block.end());
  };
  collect(false);
  collect(true);
  return out;
}

int total_cohomology(const BundleData& bundle, int p) {
  int total = 0;
  for (int s = 0; s <= bundle.f; ++s) total += bundle.dim_h(p - s, s);
  return total;
}

BundleData kunneth_table(const std::vector<int>& betti_B, const std::vector<int>& betti_F) {
  BundleData bun;
  bun.b = static_cast<int>(betti_B.size()) - 1;
  bun.f = static_cast<int>(betti_F.size()) - 1;
  if (bun.b < 0 || bun.f < 0) throw SchemaError("kunneth_table: empty Betti list");
  bun.h.assign(bun.b + 1, std::vector<int>(bun.f + 1, 0));
  for (int r = 0; r <= bun.b; ++r)
    for (int s = 0; s <= bun.f; ++s) bun.h[r][s] = betti_B[r] * betti_F[s];
  return bun;
}

std::pair<Channel, int> star_map(const BundleData& bundle, const Channel& c) {
  if (bundle.dim_h(c.r, c.s) != bundle.dim_h(bundle.b - c.r, bundle.f - c.s))
    throw InvariantViolation("star_map: duality dimension constraint violated");
  Channel image = bundle.make_channel(bundle.b - c.r, bundle.f - c.s, c.nu, c.mult, c.normal);
  return {image, bundle.star_sign(c.r, c.s)};
}

double tau1_of(const std::vector<Channel>& channels) {
  double t = std::numeric_limits<double>::infinity();
  for (const auto& c : channels)
    if (c.theta > 0.0) t = std::min(t, c.theta);
  return t;
}

}  // namespace cuspidal
