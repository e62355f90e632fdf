#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "por/merkle.hpp"
#include "por/server_store.hpp"

namespace por::wire {

inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint16_t kDefaultPort = 7007;
inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;
inline constexpr std::size_t kFrameHeaderBytes = 5;  // u32 length + type

/// Per-audit traffic in the private local mode: the challenge element plus
/// m response elements, under fixed framing overhead.
inline constexpr std::uint64_t kPrivateAuditOverheadBytes = 35;
inline std::uint64_t private_audit_wire_bytes(std::uint64_t m) {
  return 8 * (m + 1) + kPrivateAuditOverheadBytes;
}

enum class MsgType : std::uint8_t {
  kHello = 0x01,
  kInitBegin = 0x02,
  kInitData = 0x03,
  kInitAux = 0x04,
  kInitCommit = 0x05,
  kReadReq = 0x10,
  kWriteReq = 0x11,
  kAuditChallenge = 0x12,
  kError = 0x7F,
  kHelloResp = 0x81,
  kInitBeginResp = 0x82,
  kInitDataResp = 0x83,
  kInitAuxResp = 0x84,
  kInitCommitResp = 0x85,
  kReadResp = 0x90,
  kWriteResp = 0x91,
  kAuditResp = 0x92,
};

bool is_known_type(std::uint8_t t);

/// Length (u32 big-endian, counts type byte + payload), type, payload.
std::vector<std::uint8_t> frame_encode(MsgType type,
                                       std::span<const std::uint8_t> payload);

struct FrameView {
  MsgType type;
  std::span<const std::uint8_t> payload;
};

/// Decodes one complete frame; throws ProtocolError on truncation, oversize
/// length, or unknown type. consumed reports the frame's total size.
FrameView frame_decode(std::span<const std::uint8_t> bytes,
                       std::size_t* consumed = nullptr);

// Message payloads. Every payload begins with the correlation id.

struct Hello {
  std::uint64_t corr = 0;
  std::uint16_t version = kVersion;
};

struct InitBegin {
  std::uint64_t corr = 0;
  StoreConfig config;
};

struct InitChunk {  // InitData and InitAux
  std::uint64_t corr = 0;
  std::uint64_t offset = 0;
  std::span<const std::uint8_t> bytes;  // view into the frame payload
};

struct InitCommitResp {
  std::uint64_t corr = 0;
  Digest root_data{};
  std::optional<Digest> root_control;
};

struct ReadReq {
  std::uint64_t corr = 0;
  TreeId tree = TreeId::Data;
  std::uint64_t i = 0;
  std::uint64_t j = 0;
};

struct WriteReq {
  std::uint64_t corr = 0;
  TreeId tree = TreeId::Data;
  std::uint64_t i = 0;
  std::uint64_t j = 0;
  std::span<const std::uint8_t> value;
};

struct BlocksResp {  // ReadResp and WriteResp
  std::uint64_t corr = 0;
  std::uint64_t first_block = 0;
  std::uint32_t block_count = 0;
  std::span<const std::uint8_t> data;
  MerklePath path;
};

struct AuditChallenge {
  std::uint64_t corr = 0;
  std::span<const std::uint8_t> rho;
};

struct AuditResp {
  std::uint64_t corr = 0;
  std::span<const std::uint8_t> y;
  std::optional<std::span<const std::uint8_t>> control;
  MerklePath control_path;
};

enum class ErrCode : std::uint16_t {
  kProtocol = 1,
  kRange = 2,
  kIo = 3,
  kState = 4,
};

struct Error {
  std::uint64_t corr = 0;
  ErrCode code = ErrCode::kProtocol;
  std::string detail;
};

std::vector<std::uint8_t> encode_hello(const Hello&);
Hello decode_hello(std::span<const std::uint8_t>);

std::vector<std::uint8_t> encode_init_begin(const InitBegin&);
InitBegin decode_init_begin(std::span<const std::uint8_t>);

std::vector<std::uint8_t> encode_init_chunk(std::uint64_t corr,
                                            std::uint64_t offset,
                                            std::span<const std::uint8_t>);
InitChunk decode_init_chunk(std::span<const std::uint8_t>);

std::vector<std::uint8_t> encode_corr_only(std::uint64_t corr);
std::uint64_t decode_corr_only(std::span<const std::uint8_t>);

std::vector<std::uint8_t> encode_init_commit_resp(const InitCommitResp&);
InitCommitResp decode_init_commit_resp(std::span<const std::uint8_t>);

std::vector<std::uint8_t> encode_read_req(const ReadReq&);
ReadReq decode_read_req(std::span<const std::uint8_t>);

std::vector<std::uint8_t> encode_write_req(const WriteReq&);
WriteReq decode_write_req(std::span<const std::uint8_t>);

std::vector<std::uint8_t> encode_blocks_resp(std::uint64_t corr,
                                             const BlocksOut&);
BlocksResp decode_blocks_resp(std::span<const std::uint8_t>);

std::vector<std::uint8_t> encode_audit_challenge(const AuditChallenge&);
AuditChallenge decode_audit_challenge(std::span<const std::uint8_t>);

std::vector<std::uint8_t> encode_audit_resp(
    std::uint64_t corr, std::span<const std::uint8_t> y,
    const std::optional<std::vector<std::uint8_t>>& control,
    const MerklePath& control_path);
AuditResp decode_audit_resp(std::span<const std::uint8_t>);

std::vector<std::uint8_t> encode_error(const Error&);
Error decode_error(std::span<const std::uint8_t>);

// Blocking socket helpers shared by daemon and client.

/// Reads one frame; returns nothing on clean EOF at a frame boundary.
std::optional<std::vector<std::uint8_t>> read_frame_raw(int fd,
                                                        int timeout_ms);
void write_all(int fd, std::span<const std::uint8_t> bytes, int timeout_ms);

}  // namespace por::wire
