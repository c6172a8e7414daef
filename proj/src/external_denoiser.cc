#include "skoop/external_denoiser.h"

#include <bit>
#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "skoop/error.h"

namespace skoop {

namespace {

class EofError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::byte((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::byte((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::span<const std::byte> in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(in[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::span<const std::byte> in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::to_integer<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

}  // namespace

FdStream::FdStream(int read_fd, int write_fd)
    : read_fd_(read_fd), write_fd_(write_fd) {}

FdStream::~FdStream() {
  if (read_fd_ >= 0) ::close(read_fd_);
  close_write();
}

void FdStream::close_write() {
  if (write_fd_ >= 0) {
    ::close(write_fd_);
    write_fd_ = -1;
  }
}

void FdStream::read_exact(std::span<std::byte> out) {
  std::size_t got = 0;
  while (got < out.size()) {
    const ssize_t n = ::read(read_fd_, out.data() + got, out.size() - got);
    if (n < 0 && errno == EINTR) continue;
    if (n < 0) throw BridgeError(errno_text("bridge read"));
    if (n == 0) {
      throw EofError("bridge: short read (" + std::to_string(got) + " of " +
                     std::to_string(out.size()) + " bytes)");
    }
    got += static_cast<std::size_t>(n);
  }
}

void FdStream::write_all(std::span<const std::byte> in) {
  if (write_fd_ < 0) throw BridgeError("bridge: write side closed");
  std::size_t put = 0;
  while (put < in.size()) {
    const ssize_t n = ::write(write_fd_, in.data() + put, in.size() - put);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw BridgeError(errno_text("bridge write"));
    put += static_cast<std::size_t>(n);
  }
}

Subprocess::Subprocess(const std::string& command) {
  // A dead peer must surface as EPIPE, not terminate the process.
  std::signal(SIGPIPE, SIG_IGN);
  int to_child[2], from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) throw BridgeError(errno_text("pipe"));
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw BridgeError(errno_text("pipe"));
  }
  pid_ = ::fork();
  if (pid_ < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    throw BridgeError(errno_text("fork"));
  }
  if (pid_ == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  pipes_ = std::make_unique<FdStream>(from_child[0], to_child[1]);
}

Subprocess::~Subprocess() {
  pipes_->close_write();
  pipes_.reset();
  int status = 0;
  for (int i = 0; i < 50; ++i) {
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_ || r < 0) return;
    ::usleep(10000);
  }
  ::kill(pid_, SIGKILL);
  ::waitpid(pid_, &status, 0);
}

void Subprocess::read_exact(std::span<std::byte> out) { pipes_->read_exact(out); }

void Subprocess::write_all(std::span<const std::byte> in) {
  pipes_->write_all(in);
}

std::vector<std::byte> encode_handshake(const Handshake& h) {
  std::vector<std::byte> out;
  out.reserve(kHandshakeBytes);
  for (char c : kHandshakeMagic) out.push_back(std::byte(c));
  put_u32(out, h.channels);
  put_u32(out, h.height);
  put_u32(out, h.width);
  put_u32(out, std::bit_cast<std::uint32_t>(h.strength));
  return out;
}

Handshake decode_handshake(std::span<const std::byte> bytes) {
  if (bytes.size() != kHandshakeBytes) {
    throw BridgeError("handshake: expected " + std::to_string(kHandshakeBytes) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  for (std::size_t i = 0; i < kHandshakeMagic.size(); ++i) {
    if (bytes[i] != std::byte(kHandshakeMagic[i])) {
      throw BridgeError("handshake: bad magic");
    }
  }
  Handshake h;
  h.channels = get_u32(bytes.subspan(8));
  h.height = get_u32(bytes.subspan(12));
  h.width = get_u32(bytes.subspan(16));
  h.strength = std::bit_cast<float>(get_u32(bytes.subspan(20)));
  return h;
}

std::vector<std::byte> encode_frame(std::uint64_t counter, const Image& x) {
  std::vector<std::byte> out;
  out.reserve(frame_bytes(x.shape()));
  put_u64(out, counter);
  for (double v : x.data()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

Image decode_frame(std::span<const std::byte> bytes, const Shape& shape,
                   std::uint64_t* counter) {
  if (bytes.size() != frame_bytes(shape)) {
    throw BridgeError("frame: expected " + std::to_string(frame_bytes(shape)) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  if (counter != nullptr) *counter = get_u64(bytes);
  Image x(shape);
  auto dst = x.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = std::bit_cast<float>(get_u32(bytes.subspan(8 + 4 * i)));
  }
  return x;
}

ExternalDenoiser::ExternalDenoiser(std::unique_ptr<ByteStream> stream,
                                   double strength)
    : stream_(std::move(stream)), strength_(strength) {
  if (!stream_) throw InvalidArgument("external denoiser: null stream");
}

void ExternalDenoiser::handshake(const Shape& shape) {
  const auto hello = encode_handshake(
      {static_cast<std::uint32_t>(shape.channels),
       static_cast<std::uint32_t>(shape.height),
       static_cast<std::uint32_t>(shape.width), static_cast<float>(strength_)});
  stream_->write_all(hello);
  std::array<std::byte, 4> reply{};
  stream_->read_exact(reply);
  for (std::size_t i = 0; i < reply.size(); ++i) {
    if (reply[i] != std::byte(kHandshakeReply[i])) {
      throw BridgeError("handshake: peer did not reply OKAY");
    }
  }
  shape_ = shape;
  connected_ = true;
}

Image ExternalDenoiser::denoise(const Image& x) {
  if (!x.all_finite()) throw NonFiniteError("denoiser input is not finite");
  if (!connected_) handshake(x.shape());
  if (x.shape() != shape_) {
    throw BridgeError("bridge: image shape changed from " + shape_.to_string() +
                      " to " + x.shape().to_string());
  }
  const std::uint64_t counter = counter_++;
  stream_->write_all(encode_frame(counter, x));
  std::vector<std::byte> reply(frame_bytes(shape_));
  stream_->read_exact(reply);
  std::uint64_t echoed = 0;
  Image out = decode_frame(reply, shape_, &echoed);
  if (echoed != counter) {
    throw BridgeError("bridge: frame counter mismatch (sent " +
                      std::to_string(counter) + ", got " +
                      std::to_string(echoed) + ")");
  }
  if (!out.all_finite()) throw BridgeError("bridge: peer returned NaN or Inf");
  return out;
}

std::unique_ptr<Denoiser> make_external_denoiser(const std::string& command,
                                                 double strength) {
  return std::make_unique<ExternalDenoiser>(std::make_unique<Subprocess>(command),
                                            strength);
}

std::uint64_t serve_denoiser(ByteStream& stream,
                             const std::function<Image(const Image&)>& fn) {
  std::vector<std::byte> hello(kHandshakeBytes);
  stream.read_exact(hello);
  const Handshake h = decode_handshake(hello);
  const Shape shape{static_cast<int>(h.channels), static_cast<int>(h.height),
                    static_cast<int>(h.width)};
  std::vector<std::byte> ok(kHandshakeReply.size());
  for (std::size_t i = 0; i < ok.size(); ++i) ok[i] = std::byte(kHandshakeReply[i]);
  stream.write_all(ok);

  std::uint64_t served = 0;
  std::vector<std::byte> frame(frame_bytes(shape));
  for (;;) {
    // EOF on the first byte of a frame is a clean shutdown.
    try {
      stream.read_exact(std::span<std::byte>(frame).first(1));
    } catch (const EofError&) {
      return served;
    }
    stream.read_exact(std::span<std::byte>(frame).subspan(1));
    std::uint64_t counter = 0;
    const Image x = decode_frame(frame, shape, &counter);
    stream.write_all(encode_frame(counter, fn(x)));
    ++served;
  }
}

}  // namespace skoop
