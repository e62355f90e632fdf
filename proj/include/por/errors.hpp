#pragma once

#include <stdexcept>
#include <string>

namespace por {

/// Server response failed verification against the client's trusted state
/// (Merkle root mismatch, failed audit equation, AEAD tag failure, ...).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A set of transcripts contradicts itself during extraction.
class InconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-spec bytes on the wire.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
 public:
  enum class Code { Refused, Timeout, Closed, Io };

  TransportError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Code code() const { return code_; }

 private:
  Code code_;
};

/// A parameter constraint does not hold; the message names the inequality.
class ConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace por
