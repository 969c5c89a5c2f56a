#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "deepgroup/tensor.hpp"

namespace deepgroup {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Text container: a "deepgroup-tensors 1 <count>" line, then per tensor a
// "<name> <rank> <dims...>" line followed by one line of row-major values in
// shortest round-trip form. Reading back reproduces values bit-exactly.
void write_tensors(std::ostream& out, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensors(std::istream& in);

std::string format_double(double v);
double parse_double(const std::string& text);

}  // namespace deepgroup
