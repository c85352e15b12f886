#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace seaterra {

// Dense row-major height x width x channels tensor.
struct Tensor3 {
  int h = 0, w = 0, c = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(int h_, int w_, int c_, double fill = 0.0)
      : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, fill) {
    if (h_ <= 0 || w_ <= 0 || c_ <= 0)
      throw std::invalid_argument("Tensor3: non-positive dimension");
  }

  double& at(int y, int x, int ch) {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  double at(int y, int x, int ch) const {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }

  size_t size() const { return data.size(); }

  bool same_shape(const Tensor3& o) const {
    return h == o.h && w == o.w && c == o.c;
  }

  std::string shape_str() const {
    return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
  }
};

}  // namespace seaterra
