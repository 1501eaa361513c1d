#include "refsem/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace refsem::io {

static_assert(std::endian::native == std::endian::little,
              "tensor archives assume a little-endian host");

namespace {

constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void doubles(double* dst, std::size_t count) {
    need(count * sizeof(double));
    std::memcpy(dst, bytes_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
  }

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw CheckpointError("'" + path_ + "' is truncated or corrupt");
    }
  }

 private:
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  const std::string& bytes_;
  const std::string& path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_archive(const std::string& path, std::string_view magic,
                   const std::string& meta_json,
                   const std::vector<NamedTensor>& tensors) {
  std::string out;
  out.append(magic.data(), 4);
  put_u32(out, kVersion);
  put_u64(out, meta_json.size());
  out += meta_json;
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  std::uint64_t offset = 0;
  for (const NamedTensor& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.data.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.data.cols()));
    put_u64(out, offset);
    offset += static_cast<std::uint64_t>(t.data.size()) * sizeof(double);
  }
  put_u64(out, offset);
  for (const NamedTensor& t : tensors) {
    out.append(reinterpret_cast<const char*>(t.data.data()),
               static_cast<std::size_t>(t.data.size()) * sizeof(double));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("failed writing '" + path + "'");
}

Archive read_archive(const std::string& path, std::string_view magic) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(file)),
                    std::istreambuf_iterator<char>());
  Reader reader(bytes, path);
  if (reader.str(4) != magic) {
    throw CheckpointError("'" + path + "' has the wrong magic");
  }
  const std::uint32_t version = reader.u32();
  if (version != kVersion) {
    throw CheckpointError("'" + path + "' has unsupported format version " +
                          std::to_string(version));
  }
  Archive archive;
  archive.meta_json = reader.str(reader.u64());
  const std::uint32_t count = reader.u32();
  struct Entry {
    std::string name;
    std::uint32_t rows, cols;
    std::uint64_t offset;
  };
  std::vector<Entry> entries(count);
  for (Entry& e : entries) {
    e.name = reader.str(reader.u32());
    e.rows = reader.u32();
    e.cols = reader.u32();
    e.offset = reader.u64();
  }
  const std::uint64_t payload = reader.u64();
  std::uint64_t expected = 0;
  for (const Entry& e : entries) {
    if (e.offset != expected) {
      throw CheckpointError("'" + path + "' has inconsistent tensor offsets");
    }
    expected += std::uint64_t(e.rows) * e.cols * sizeof(double);
  }
  if (payload != expected) {
    throw CheckpointError("'" + path + "' has inconsistent payload size");
  }
  for (const Entry& e : entries) {
    NamedTensor t;
    t.name = e.name;
    t.data.resize(e.rows, e.cols);
    reader.doubles(t.data.data(), std::size_t(e.rows) * e.cols);
    archive.tensors.push_back(std::move(t));
  }
  return archive;
}

const Eigen::MatrixXd& Archive::tensor(std::string_view name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return t.data;
  }
  throw CheckpointError("archive is missing tensor '" + std::string(name) + "'");
}

}  // namespace refsem::io
