#pragma once

// Data model for the fibration M -> B restricted to the fiber-harmonic
// sector: cohomology dimension table h[r][s] = dim H^r(B, H^s(F)),
// per-bidegree lists of positive horizontal-Laplacian eigenvalues, and
// the channel inventory per form degree.

#include <map>
#include <stdexcept>
#include <vector>

namespace cuspidal {

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One fiber-harmonic mode.  `r` is the base degree, `s` the fiber degree,
// `nu` the horizontal-Laplacian eigenvalue (0 for harmonic channels) and
// `normal` marks the du-wedge component.  The weight a = f/2 - s, d = |a|
// and the threshold theta = nu + d^2 are derived at construction.
struct Channel {
  int r = 0;
  int s = 0;
  double nu = 0.0;
  int mult = 1;
  bool normal = false;
  double a = 0.0;
  double d = 0.0;
  double theta = 0.0;

  int degree() const { return r + s + (normal ? 1 : 0); }
};

struct NuEntry {
  double nu;
  int mult;
};

struct BundleData {
  int f = 0;  // fiber dimension
  int b = 0;  // base dimension
  // h[r][s], 0 <= r <= b, 0 <= s <= f
  std::vector<std::vector<int>> h;
  // strictly positive eigenvalues per bidegree (ascending)
  std::map<std::pair<int, int>, std::vector<NuEntry>> nu_lists;
  // channel-level Hodge star signs per bidegree, default +1
  std::map<std::pair<int, int>, int> star_signs;

  int dim_h(int r, int s) const {
    if (r < 0 || r > b || s < 0 || s > f) return 0;
    return h[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)];
  }
  int star_sign(int r, int s) const {
    auto it = star_signs.find({r, s});
    return it == star_signs.end() ? 1 : it->second;
  }
  void validate() const;  // throws SchemaError
  bool poincare_symmetric() const;
  double total_dim_m() const { return b + f; }

  Channel make_channel(int r, int s, double nu, int mult, bool normal) const;
};

// Channels contributing to form degree p: tangential with r+s = p, normal
// with r+s = p-1.  Ordering: all tangential channels sorted by (s, r, nu),
// then all normal channels in the same sort.  Multiplicities come from h
// and nu_lists.
std::vector<Channel> channels_for_degree(const BundleData& bundle, int p, bool include_nonzero_nu);

// Sum of h[r][s] over r+s = p.
int total_cohomology(const BundleData& bundle, int p);

// Trivial-product table h[r][s] = betti_B[r] * betti_F[s], no nu entries.
BundleData kunneth_table(const std::vector<int>& betti_B, const std::vector<int>& betti_F);

// Channel-level Hodge star: (r, s) -> (b-r, f-s) with a sign from the sign
// table.  Requires h[r][s] == h[b-r][f-s].
std::pair<Channel, int> star_map(const BundleData& bundle, const Channel& c);

// Smallest strictly positive threshold present among `channels`
// (+infinity when none).
double tau1_of(const std::vector<Channel>& channels);

}  // namespace cuspidal
