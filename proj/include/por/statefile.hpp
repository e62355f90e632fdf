#pragma once

#include <string>
#include <vector>

#include "por/client.hpp"

namespace por {

/// Client state on disk: magic "PORC", version, mode, lambda, dimensions,
/// seeds, roots, then the mode-dependent payload (control matrix, or key +
/// control root). Little-endian integers throughout. Files are replaced
/// atomically via a temp file and rename.
void save_client_state(const ClientState& st, const std::string& path);
ClientState load_client_state(const std::string& path);

/// One audit per file: magic "PORT", version, mode, element width, rho, the
/// response vector and the verdict.
void save_transcript(const AuditTranscript& tr, Mode mode,
                     const std::string& path);
struct StoredTranscript {
  Mode mode;
  AuditTranscript transcript;
};
StoredTranscript load_transcript(const std::string& path);

/// Write bytes to path atomically (temp file + rename).
void atomic_write(const std::string& path,
                  std::span<const std::uint8_t> bytes);

}  // namespace por
