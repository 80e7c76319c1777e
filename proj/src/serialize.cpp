#include "depthguard/serialize.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace depthguard {

static_assert(std::endian::native == std::endian::little, "payload encoding assumes a little-endian host");

std::uint64_t ByteReader::get(int width, std::string_view what) {
  if (remaining() < static_cast<std::size_t>(width))
    fail(ErrorCode::format, "truncated input at byte " + std::to_string(pos_) + " while reading " + std::string(what));
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += width;
  return v;
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n, std::string_view what) {
  if (remaining() < n)
    fail(ErrorCode::format, "truncated input at byte " + std::to_string(pos_) + " while reading " + std::string(what) +
                                " (need " + std::to_string(n) + " bytes, have " + std::to_string(remaining()) + ")");
  auto s = data_.subspan(pos_, n);
  pos_ += n;
  return s;
}

void ByteReader::expect_magic(std::string_view magic) {
  const std::size_t at = pos_;
  auto got = raw(magic.size(), "magic");
  if (!std::equal(got.begin(), got.end(), magic.begin()))
    fail(ErrorCode::format, "bad magic at byte " + std::to_string(at) + ", expected " + std::string(magic));
}

void write_tensor(ByteWriter& out, const Tensor& t) {
  out.raw(std::string_view("DGT1"));
  out.u8(static_cast<std::uint8_t>(t.dtype()));
  out.u8(static_cast<std::uint8_t>(t.ndim()));
  for (auto extent : t.shape()) out.u32(static_cast<std::uint32_t>(extent));
  dispatch(t.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto d = t.data<T>();
    out.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(d.data()), d.size_bytes()));
  });
}

Tensor read_tensor(ByteReader& in) {
  in.expect_magic("DGT1");
  const std::size_t dtype_at = in.offset();
  const auto code = in.u8("dtype");
  if (code > 1) fail(ErrorCode::format, "unknown dtype code " + std::to_string(code) + " at byte " + std::to_string(dtype_at));
  const auto dtype = static_cast<Dtype>(code);
  const auto ndim = in.u8("ndim");
  if (ndim == 0) fail(ErrorCode::format, "zero-rank tensor at byte " + std::to_string(in.offset() - 1));
  Shape shape(ndim);
  for (auto& extent : shape) {
    extent = in.u32("extent");
    if (extent == 0) fail(ErrorCode::format, "zero extent at byte " + std::to_string(in.offset() - 4));
  }
  const std::size_t n = numel_of(shape);
  auto storage = std::make_shared<detail::Storage>();
  dispatch(dtype, [&](auto tag) {
    using T = decltype(tag);
    auto bytes = in.raw(n * sizeof(T), "tensor payload");
    std::vector<T> buf(n);
    std::memcpy(buf.data(), bytes.data(), bytes.size());
    storage->buffer = std::move(buf);
  });
  return make_tensor(std::move(shape), dtype, std::move(storage));
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  ByteWriter w;
  write_tensor(w, t);
  return w.take();
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Tensor t = read_tensor(r);
  if (!r.at_end()) fail(ErrorCode::format, "trailing bytes after tensor at byte " + std::to_string(r.offset()));
  return t;
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) { write_file_atomic(path, encode_tensor(t)); }

Tensor load_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
      f.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorCode::io, "write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::io, "cannot move output into place at " + path.string());
  }
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(crc, bytes.data(), static_cast<uInt>(bytes.size())));
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace depthguard
