#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string_view>

#include "pcn/primitives.hpp"

namespace pcn {

// Statement for hop i: exists w with H(w) = y_next and H(w xor x_this) = y_this.
struct HopStatement {
  Digest y_next;
  Digest y_this;
  Preimage x_this;
  Bytes serialize() const;
  bool operator==(const HopStatement&) const = default;
};

enum class ProofBackend : std::uint8_t { Revealing = 1, Oracle = 2 };

std::string_view proof_backend_name(ProofBackend b);
ProofBackend parse_proof_backend(std::string_view name);

struct Proof {
  ProofBackend backend = ProofBackend::Revealing;
  Bytes payload;

  // tag byte || u32 big-endian length || payload
  Bytes serialize() const;
  static std::optional<Proof> parse(ByteView bytes);
  bool operator==(const Proof&) const = default;
};

class ProofSystem {
 public:
  virtual ~ProofSystem() = default;
  virtual ProofBackend backend() const = 0;
  virtual Proof prove(const HopStatement& statement, const Preimage& witness) = 0;
  virtual bool verify(const HopStatement& statement, const Proof& proof) const = 0;
  virtual std::unique_ptr<ProofSystem> clone() const = 0;
};

// Proof carries the witness; verification recomputes both hashes.
class RevealingProofs final : public ProofSystem {
 public:
  explicit RevealingProofs(HashFunction hash = {}) : hash_(hash) {}
  ProofBackend backend() const override { return ProofBackend::Revealing; }
  Proof prove(const HopStatement& statement, const Preimage& witness) override;
  bool verify(const HopStatement& statement, const Proof& proof) const override;
  std::unique_ptr<ProofSystem> clone() const override { return std::make_unique<RevealingProofs>(*this); }

 private:
  HashFunction hash_;
};

// Idealized system: a registry of valid (statement, token) pairs. Tokens
// reveal nothing about the witness.
class OracleProofs final : public ProofSystem {
 public:
  explicit OracleProofs(HashFunction hash = {}) : hash_(hash) {}
  ProofBackend backend() const override { return ProofBackend::Oracle; }
  Proof prove(const HopStatement& statement, const Preimage& witness) override;
  bool verify(const HopStatement& statement, const Proof& proof) const override;
  std::unique_ptr<ProofSystem> clone() const override { return std::make_unique<OracleProofs>(*this); }
  std::size_t registered() const { return registry_.size(); }

 private:
  HashFunction hash_;
  std::uint64_t counter_ = 0;
  std::map<Digest, Digest> registry_;
};

std::unique_ptr<ProofSystem> make_proof_system(ProofBackend backend, HashFunction hash = {});

}  // namespace pcn
