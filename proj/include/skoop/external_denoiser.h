#pragma once

// Wire protocol for denoisers running in another process.
//
//   handshake  "SKOOPDN1" u32 C, u32 H, u32 W, f32 sigma_d   -> "OKAY"
//   request    u64 counter, C*H*W f32                         -> same layout
//
// All integers and floats are little-endian; samples are planar
// channel-major. Any short read/write, bad magic or counter mismatch is a
// BridgeError.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "skoop/denoiser.h"

namespace skoop {

inline constexpr std::array<char, 8> kHandshakeMagic = {'S', 'K', 'O', 'O',
                                                        'P', 'D', 'N', '1'};
inline constexpr std::array<char, 4> kHandshakeReply = {'O', 'K', 'A', 'Y'};
inline constexpr std::size_t kHandshakeBytes = 8 + 3 * 4 + 4;

/// Blocking byte channel.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  /// Reads exactly `out.size()` bytes or throws BridgeError.
  virtual void read_exact(std::span<std::byte> out) = 0;
  /// Writes all bytes or throws BridgeError.
  virtual void write_all(std::span<const std::byte> in) = 0;
};

/// ByteStream over a pair of file descriptors. Owns (closes) them.
class FdStream : public ByteStream {
 public:
  FdStream(int read_fd, int write_fd);
  ~FdStream() override;
  FdStream(const FdStream&) = delete;
  FdStream& operator=(const FdStream&) = delete;

  void read_exact(std::span<std::byte> out) override;
  void write_all(std::span<const std::byte> in) override;
  /// Closes the write side so the peer sees EOF.
  void close_write();

 private:
  int read_fd_;
  int write_fd_;
};

/// A `/bin/sh -c command` child whose stdin/stdout are the stream.
class Subprocess : public ByteStream {
 public:
  explicit Subprocess(const std::string& command);
  ~Subprocess() override;
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  void read_exact(std::span<std::byte> out) override;
  void write_all(std::span<const std::byte> in) override;

 private:
  int pid_ = -1;
  std::unique_ptr<FdStream> pipes_;
};

struct Handshake {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  float strength = 0.0f;
};

std::vector<std::byte> encode_handshake(const Handshake& h);
Handshake decode_handshake(std::span<const std::byte> bytes);
/// Counter followed by the image samples narrowed to f32.
std::vector<std::byte> encode_frame(std::uint64_t counter, const Image& x);
/// Inverse of encode_frame for an image of shape `shape`.
Image decode_frame(std::span<const std::byte> bytes, const Shape& shape,
                   std::uint64_t* counter);
inline std::size_t frame_bytes(const Shape& shape) {
  return 8 + 4 * shape.size();
}

/// Client side. Handshakes on the first call; later calls must keep the
/// same image shape.
class ExternalDenoiser : public Denoiser {
 public:
  ExternalDenoiser(std::unique_ptr<ByteStream> stream, double strength);

  Image denoise(const Image& x) override;
  std::string name() const override { return "external"; }

  std::uint64_t frames_sent() const { return counter_; }

 private:
  void handshake(const Shape& shape);

  std::unique_ptr<ByteStream> stream_;
  double strength_;
  bool connected_ = false;
  Shape shape_;
  std::uint64_t counter_ = 0;
};

std::unique_ptr<Denoiser> make_external_denoiser(const std::string& command,
                                                 double strength);

/// Peer side: answers the handshake, then echoes the counter and
/// `fn(image)` for every request until the stream reaches EOF between
/// frames. Returns the number of frames served.
std::uint64_t serve_denoiser(ByteStream& stream,
                             const std::function<Image(const Image&)>& fn);

}  // namespace skoop
