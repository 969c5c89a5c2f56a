#include "deepgroup/checkpoint.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace deepgroup {

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) throw std::invalid_argument("invalid number '" + text + "'");
  return v;
}

void write_tensors(std::ostream& out, const std::vector<NamedTensor>& tensors) {
  out << "deepgroup-tensors 1 " << tensors.size() << '\n';
  for (const auto& [name, t] : tensors) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) throw std::invalid_argument("tensor name must be a single token");
    out << name << ' ' << t.rank();
    for (const auto d : t.shape()) out << ' ' << d;
    out << '\n';
    const auto values = t.values();
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << format_double(values[i]);
    out << '\n';
  }
}

std::vector<NamedTensor> read_tensors(std::istream& in) {
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version >> count) || magic != "deepgroup-tensors" || version != 1)
    throw std::runtime_error("not a deepgroup tensor container");
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    NamedTensor nt;
    std::size_t rank = 0;
    if (!(in >> nt.name >> rank)) throw std::runtime_error("truncated tensor header");
    Shape shape(rank);
    for (auto& d : shape)
      if (!(in >> d)) throw std::runtime_error("truncated shape for " + nt.name);
    std::vector<double> values(element_count(shape));
    std::string token;
    for (auto& v : values) {
      if (!(in >> token)) throw std::runtime_error("truncated values for " + nt.name);
      v = parse_double(token);
    }
    nt.tensor = Tensor::from(std::move(shape), std::move(values));
    out.push_back(std::move(nt));
  }
  return out;
}

}  // namespace deepgroup
