#include "pcn/contracts.hpp"

namespace pcn {

void htlc_fulfill(HtlcContract& c, const Preimage& r, Time now, const HashFunction& hash) {
  if (c.status != HtlcStatus::Locked) throw Error(Errc::AlreadySettled);
  if (hash(r) != c.condition) throw Error(Errc::BadPreimage);
  if (now >= c.timeout) throw Error(Errc::Expired);
  c.status = HtlcStatus::Fulfilled;
  c.preimage = r;
}

void htlc_refund(HtlcContract& c, Time now) {
  if (c.status != HtlcStatus::Locked) throw Error(Errc::AlreadySettled);
  if (now < c.timeout) throw Error(Errc::NotYetExpired);
  c.status = HtlcStatus::Refunded;
}

Preimage MultiHopSetup::suffix_xor(std::size_t i) const {
  Preimage acc;
  for (std::size_t j = i; j < x.size(); ++j) acc = acc ^ x[j];
  return acc;
}

MultiHopSetup setup_htlc(std::size_t n, const HashFunction& hash, ProofSystem& proofs, Rng& rng) {
  if (n == 0) throw Error(Errc::InvalidArgument, "setup needs at least one hop");
  MultiHopSetup s;
  s.x.reserve(n);
  for (std::size_t i = 0; i < n; ++i) s.x.push_back(Preimage::random(rng));
  s.y.resize(n);
  Preimage acc;
  for (std::size_t i = n; i-- > 0;) {
    acc = acc ^ s.x[i];
    s.y[i] = hash(acc);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) s.proofs.push_back(proofs.prove(s.statement(i), s.suffix_xor(i + 1)));
  return s;
}

bool verify_hop(const ProofSystem& proofs, const HopStatement& statement, const Proof& proof) {
  return proofs.verify(statement, proof);
}

bool verify_hop(const ProofSystem& proofs, const HopStatement& statement, ByteView serialized_proof) {
  auto proof = Proof::parse(serialized_proof);
  return proof && proofs.verify(statement, *proof);
}

Preimage derive_upstream(const Preimage& x_this, const Preimage& r, const Digest& y_next, const HashFunction& hash) {
  if (hash(r) != y_next) throw Error(Errc::BadPreimage);
  return x_this ^ r;
}

}  // namespace pcn
