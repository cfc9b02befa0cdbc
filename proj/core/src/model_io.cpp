#include "vdlab/model_io.hpp"

#include <cstring>

#include "vdlab/errors.hpp"
#include "vdlab/util.hpp"

namespace vdlab {

namespace {

const char kMagic[4] = {'V', 'D', 'M', 'L'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, 8);
  put_u64(out, u);
}

struct Reader {
  const unsigned char* p;
  std::size_t remaining;
  const std::string& path;

  void need(std::size_t n) {
    if (remaining < n) throw ParseError("truncated model file: " + path);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    p += 4;
    remaining -= 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    p += 8;
    remaining -= 8;
    return v;
  }
  double f64() {
    const std::uint64_t u = u64();
    double d;
    std::memcpy(&d, &u, 8);
    return d;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    remaining -= n;
    return s;
  }
};

}  // namespace

const std::vector<double>& ModelContainer::blob(const std::string& name) const {
  for (const auto& [n, data] : blobs) {
    if (n == name) return data;
  }
  throw ParseError("model container is missing blob '" + name + "'");
}

void write_model_container(const std::string& path, const ModelContainer& container) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kModelContainerVersion);
  put_u32(out, container.kind);
  put_u64(out, container.params_json.size());
  out += container.params_json;
  put_u64(out, container.blobs.size());
  for (const auto& [name, data] : container.blobs) {
    put_u64(out, name.size());
    out += name;
    put_u64(out, data.size());
    for (double d : data) put_f64(out, d);
  }
  write_text_file(path, out);
}

ModelContainer read_model_container(const std::string& path) {
  const std::string text = read_text_file(path);
  if (text.size() < 12 || std::memcmp(text.data(), kMagic, 4) != 0) {
    throw ParseError("not a model file: " + path);
  }
  Reader r{reinterpret_cast<const unsigned char*>(text.data()) + 4, text.size() - 4, path};
  const std::uint32_t version = r.u32();
  if (version != kModelContainerVersion) {
    throw UnsupportedError(strfmt("model container version %u not supported: %s", version,
                                  path.c_str()));
  }
  ModelContainer out;
  out.kind = r.u32();
  out.params_json = r.bytes(r.u64());
  const std::uint64_t n_blobs = r.u64();
  for (std::uint64_t i = 0; i < n_blobs; ++i) {
    std::string name = r.bytes(r.u64());
    const std::uint64_t len = r.u64();
    std::vector<double> data(len);
    for (std::uint64_t k = 0; k < len; ++k) data[k] = r.f64();
    out.blobs.emplace_back(std::move(name), std::move(data));
  }
  return out;
}

std::uint32_t model_container_kind(const std::string& path) {
  const std::string text = read_text_file(path);
  if (text.size() < 12 || std::memcmp(text.data(), kMagic, 4) != 0) {
    throw ParseError("not a model file: " + path);
  }
  Reader r{reinterpret_cast<const unsigned char*>(text.data()) + 4, text.size() - 4, path};
  r.u32();
  return r.u32();
}

}  // namespace vdlab
