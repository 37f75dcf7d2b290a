#include "mcbench/samplers.hpp"

namespace mcbench {

void Chain::resize(std::size_t n, Index p, bool leapfrog) {
  states.resize(static_cast<Index>(n), p);
  log_post.assign(n, 0.0);
  cum_evals.assign(n, 0);
  if (leapfrog) cum_leapfrog.assign(n, 0);
}

void Chain::validate() const {
  const std::size_t n = size();
  if (log_post.size() != n || cum_evals.size() != n) throw InputError("chain: column lengths differ");
  if (!cum_leapfrog.empty() && cum_leapfrog.size() != n) throw InputError("chain: leapfrog column length");
  for (std::size_t i = 1; i < n; ++i) {
    if (cum_evals[i] < cum_evals[i - 1]) throw InputError("chain: cum_evals decreases at step " + std::to_string(i));
  }
  if (n > 0 && burn_in >= n) throw InputError("chain: burn-in not shorter than the chain");
  if (!names.empty() && static_cast<Index>(names.size()) != dim()) throw InputError("chain: names/dim mismatch");
}

Chain Chain::prefix(std::size_t n) const {
  if (n > size()) throw InputError("chain: prefix longer than the chain");
  Chain c = *this;
  c.states = states.topRows(static_cast<Index>(n));
  c.log_post.resize(n);
  c.cum_evals.resize(n);
  if (!cum_leapfrog.empty()) c.cum_leapfrog.resize(n);
  if (c.burn_in >= n) c.burn_in = 0;
  return c;
}

MatrixXd Chain::trimmed() const {
  return states.bottomRows(states.rows() - static_cast<Index>(burn_in));
}

std::uint64_t Chain::evals_after_burn_in() const {
  if (cum_evals.empty()) return 0;
  const std::uint64_t before = burn_in == 0 ? 0 : cum_evals[burn_in - 1];
  return cum_evals.back() - before;
}

}  // namespace mcbench
