#pragma once

#include <string>
#include <vector>

#include "por/client.hpp"
#include "por/extract.hpp"
#include "por/manifest.hpp"
#include "por/pubpor.hpp"

namespace por {

/// Writer-side state of the public mode. The key matrix K is regenerated
/// from the seeds whenever a manifest is produced; only the seeds, roots and
/// signing key persist.
struct PubWriterState {
  PorParams params;
  std::vector<RScalar> seeds;
  Digest root_data{};
  Digest root_control{};
  SignPublic sign_pk{};
  SignSecret sign_sk{};
};

void save_writer_state(const PubWriterState& st, const std::string& path);
PubWriterState load_writer_state(const std::string& path);

class PubWriter {
 public:
  PubWriter(PubWriterState state, ServerApi& server)
      : st_(std::move(state)), server_(server) {}

  static PubWriter init(const PorParams& params, ByteReader& data, Rng& rng,
                        ServerApi& server);

  const PubWriterState& state() const { return st_; }

  /// Fresh signed manifest for the current roots.
  Manifest manifest() const;

  std::vector<std::uint8_t> read_bytes(std::uint64_t offset,
                                       std::uint64_t length);
  void write_bytes(std::uint64_t offset, std::span<const std::uint8_t> bytes);
  void write_cell(std::uint64_t i, std::uint64_t j, const RScalar& value);

  /// Writer shortcut: fold y with the seeds first, then one exponentiation
  /// per control row.
  AuditTranscript audit(Rng& rng);

 private:
  void apply_cell_write(std::uint64_t i, std::uint64_t j,
                        const RScalar& value);
  RScalar read_cell_value(std::uint64_t i, std::uint64_t j);
  std::vector<Ristretto255::Elem> fetch_control_column(
      std::uint64_t j, std::vector<std::uint8_t>* record);

  PubWriterState st_;
  ServerApi& server_;
};

/// Third-party auditor: holds only the manifest.
class PubVerifier {
 public:
  PubVerifier(Manifest manifest, ServerApi& server);

  const Manifest& manifest() const { return man_; }

  AuditTranscript audit(Rng& rng);
  std::vector<std::uint8_t> read_bytes(std::uint64_t offset,
                                       std::uint64_t length);

 private:
  Manifest man_;
  PorParams params_;
  ServerApi& server_;
};

/// Public-mode extraction: transcripts to file bytes over the group's
/// scalar field.
std::vector<std::uint8_t> extract_public(
    std::uint64_t m, std::uint64_t n, std::uint64_t n_bytes,
    std::uint64_t e_required,
    std::span<const DecodedTranscript<RScalar>> transcripts);

}  // namespace por
