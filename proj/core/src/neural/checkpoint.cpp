#include "abdoshape/neural/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "abdoshape/detail/binary.hpp"
#include "abdoshape/error.hpp"
#include "abdoshape/geometry/io.hpp"

namespace abdoshape::neural {

std::string encode_checkpoint(const ParameterStore& store) {
  detail::ByteWriter w;
  w.raw("TNSR");
  w.put(static_cast<std::uint32_t>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& name = store.name(i);
    const auto& t = store.value(i);
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw InvalidArgument("parameter name too long");
    if (t.rank() > std::numeric_limits<std::uint8_t>::max()) throw InvalidArgument("tensor rank too large");
    w.put(static_cast<std::uint16_t>(name.size()));
    w.raw(name);
    w.put(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape) w.put(static_cast<std::uint32_t>(d));
    for (double v : t.values) w.put(v);
  }
  return w.take();
}

ParameterStore decode_checkpoint(const std::string& bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  if (r.raw(4) != "TNSR") throw DataError("checkpoint: bad magic, expected TNSR");
  const auto count = r.get<std::uint32_t>();
  ParameterStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint16_t>();
    std::string name(r.raw(len));
    const auto rank = r.get<std::uint8_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint32_t>();
    const auto n = element_count(shape);
    if (n * sizeof(double) > r.remaining()) throw DataError("checkpoint: truncated array '" + name + "'");
    std::vector<double> values(n);
    for (auto& v : values) {
      v = r.get<double>();
      if (!std::isfinite(v)) throw DataError("checkpoint: non-finite value in '" + name + "'");
    }
    store.add(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (r.remaining() != 0) throw DataError("checkpoint: trailing bytes");
  return store;
}

void write_checkpoint(const std::filesystem::path& path, const ParameterStore& store) {
  geometry::write_file_atomic(path, encode_checkpoint(store));
}

ParameterStore read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace abdoshape::neural
