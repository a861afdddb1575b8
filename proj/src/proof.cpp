#include "pcn/proof.hpp"

namespace pcn {

Bytes HopStatement::serialize() const {
  Bytes out;
  append_bytes(out, y_next.view());
  append_bytes(out, y_this.view());
  append_bytes(out, x_this.view());
  return out;
}

std::string_view proof_backend_name(ProofBackend b) {
  return b == ProofBackend::Revealing ? "revealing" : "oracle";
}

ProofBackend parse_proof_backend(std::string_view name) {
  if (name == "revealing") return ProofBackend::Revealing;
  if (name == "oracle") return ProofBackend::Oracle;
  throw Error(Errc::InvalidArgument, "unknown proof backend");
}

Bytes Proof::serialize() const {
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(backend));
  append_u32(out, static_cast<std::uint32_t>(payload.size()));
  append_bytes(out, payload);
  return out;
}

std::optional<Proof> Proof::parse(ByteView bytes) {
  if (bytes.size() < 5) return std::nullopt;
  if (bytes[0] != static_cast<std::uint8_t>(ProofBackend::Revealing) &&
      bytes[0] != static_cast<std::uint8_t>(ProofBackend::Oracle))
    return std::nullopt;
  const std::uint32_t len = read_u32(bytes, 1);
  if (bytes.size() != 5 + static_cast<std::size_t>(len)) return std::nullopt;
  return Proof{static_cast<ProofBackend>(bytes[0]), Bytes(bytes.begin() + 5, bytes.end())};
}

Proof RevealingProofs::prove(const HopStatement&, const Preimage& witness) {
  return Proof{ProofBackend::Revealing, Bytes(witness.view().begin(), witness.view().end())};
}

bool RevealingProofs::verify(const HopStatement& statement, const Proof& proof) const {
  if (proof.backend != ProofBackend::Revealing || proof.payload.size() != kHashSize) return false;
  const Preimage w = Preimage::from_bytes(proof.payload);
  return hash_(w) == statement.y_next && hash_(w ^ statement.x_this) == statement.y_this;
}

Proof OracleProofs::prove(const HopStatement& statement, const Preimage& witness) {
  Bytes seed = statement.serialize();
  append_u64(seed, counter_++);
  append_bytes(seed, witness.view());
  const Digest token = hash_(seed);
  if (hash_(witness) == statement.y_next && hash_(witness ^ statement.x_this) == statement.y_this)
    registry_[hash_(statement.serialize())] = token;
  return Proof{ProofBackend::Oracle, Bytes(token.view().begin(), token.view().end())};
}

bool OracleProofs::verify(const HopStatement& statement, const Proof& proof) const {
  if (proof.backend != ProofBackend::Oracle || proof.payload.size() != kHashSize) return false;
  auto it = registry_.find(hash_(statement.serialize()));
  return it != registry_.end() && it->second == Digest::from_bytes(proof.payload);
}

std::unique_ptr<ProofSystem> make_proof_system(ProofBackend backend, HashFunction hash) {
  if (backend == ProofBackend::Oracle) return std::make_unique<OracleProofs>(hash);
  return std::make_unique<RevealingProofs>(hash);
}

}  // namespace pcn
