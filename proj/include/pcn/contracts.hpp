#pragma once

#include <optional>
#include <vector>

#include "pcn/channel.hpp"
#include "pcn/group.hpp"
#include "pcn/proof.hpp"

namespace pcn {

void htlc_fulfill(HtlcContract& c, const Preimage& r, Time now, const HashFunction& hash);
void htlc_refund(HtlcContract& c, Time now);

// Conditions for an n-hop chain, indices 0-based:
//   y[i] = H(x[i] ^ x[i+1] ^ ... ^ x[n-1])
//   proofs[i] proves statement(i) = (y[i+1], y[i], x[i]) for i < n-1.
struct MultiHopSetup {
  std::vector<Preimage> x;
  std::vector<Digest> y;
  std::vector<Proof> proofs;

  std::size_t size() const { return x.size(); }
  HopStatement statement(std::size_t i) const { return HopStatement{y.at(i + 1), y.at(i), x.at(i)}; }
  // x[i] ^ ... ^ x[n-1], the preimage of y[i].
  Preimage suffix_xor(std::size_t i) const;
};

MultiHopSetup setup_htlc(std::size_t n, const HashFunction& hash, ProofSystem& proofs, Rng& rng);

bool verify_hop(const ProofSystem& proofs, const HopStatement& statement, const Proof& proof);
// Deserializes first; a malformed or truncated proof is rejected.
bool verify_hop(const ProofSystem& proofs, const HopStatement& statement, ByteView serialized_proof);

// Preimage for the incoming condition once r opens the outgoing one.
Preimage derive_upstream(const Preimage& x_this, const Preimage& r, const Digest& y_next, const HashFunction& hash);

// Discrete-log timelock contracts.
template <class Int>
struct DltcChallenge {
  Scalar<Int> x;
  GroupElement<Int> X;
};

template <class Int>
struct DltcContract {
  GroupElement<Int> condition;
  UserId payer;
  UserId payee;
  Amount value;
  Time timeout = 0;
  HtlcStatus status = HtlcStatus::Locked;
  std::optional<Scalar<Int>> solution;
};

template <class Int>
DltcChallenge<Int> dltc_challenge(const SchnorrGroup<Int>& g, Rng& rng) {
  auto x = g.random_scalar(rng);
  return {x, g.exp(x)};
}

template <class Int>
GroupElement<Int> dltc_blind(const SchnorrGroup<Int>& g, const GroupElement<Int>& X, const Scalar<Int>& z) {
  return g.mul(X, g.exp(z));
}

template <class Int>
bool dltc_solves(const SchnorrGroup<Int>& g, const GroupElement<Int>& condition, const Scalar<Int>& solution) {
  return g.exp(solution) == condition;
}

template <class Int>
void dltc_fulfill(const SchnorrGroup<Int>& g, DltcContract<Int>& c, const Scalar<Int>& solution, Time now) {
  if (c.status != HtlcStatus::Locked) throw Error(Errc::AlreadySettled);
  if (!dltc_solves(g, c.condition, solution)) throw Error(Errc::BadSolution);
  if (now >= c.timeout) throw Error(Errc::Expired);
  c.status = HtlcStatus::Fulfilled;
  c.solution = solution;
}

template <class Int>
void dltc_refund(DltcContract<Int>& c, Time now) {
  if (c.status != HtlcStatus::Locked) throw Error(Errc::AlreadySettled);
  if (now < c.timeout) throw Error(Errc::NotYetExpired);
  c.status = HtlcStatus::Refunded;
}

// From the outgoing solution z' = x + z_out recover the incoming one x + z_in.
template <class Int>
Scalar<Int> dltc_derive(const SchnorrGroup<Int>& g, const GroupElement<Int>& out_condition,
                        const Scalar<Int>& solution_out, const Scalar<Int>& z_out, const Scalar<Int>& z_in) {
  if (!dltc_solves(g, out_condition, solution_out)) throw Error(Errc::BadSolution);
  return g.add(g.sub(solution_out, z_out), z_in);
}

}  // namespace pcn
