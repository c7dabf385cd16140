#include <cmath>
#include <limits>

#include "voxelval/morphology.hpp"
#include "voxelval/error.hpp"

namespace voxelval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (x - x_p)^2 + f(p) over one line, positions
// x_p = p * step. Samples with f = inf contribute no parabola.
class EnvelopeLine {
 public:
  explicit EnvelopeLine(std::size_t n) : f_(n), out_(n), vertex_(n), bound_(n + 1) {}

  std::vector<double>& input() { return f_; }
  const std::vector<double>& output() const { return out_; }

  void run(double step) {
    const std::size_t n = f_.size();
    std::size_t q = 0;
    while (q < n && f_[q] == kInf) ++q;
    if (q == n) {
      std::fill(out_.begin(), out_.end(), kInf);
      return;
    }
    std::size_t k = 0;
    vertex_[0] = q;
    bound_[0] = -kInf;
    bound_[1] = kInf;
    for (++q; q < n; ++q) {
      if (f_[q] == kInf) continue;
      const double xq = static_cast<double>(q) * step;
      const double fq = f_[q] + xq * xq;
      double s;
      for (;;) {
        const std::size_t v = vertex_[k];
        const double xv = static_cast<double>(v) * step;
        s = (fq - (f_[v] + xv * xv)) / (2.0 * (xq - xv));
        if (s > bound_[k] || k == 0) break;
        --k;
      }
      // k == 0 with s <= bound_[0] cannot happen since bound_[0] = -inf.
      ++k;
      vertex_[k] = q;
      bound_[k] = s;
      bound_[k + 1] = kInf;
    }
    k = 0;
    for (std::size_t p = 0; p < n; ++p) {
      const double x = static_cast<double>(p) * step;
      while (bound_[k + 1] < x) ++k;
      const std::size_t v = vertex_[k];
      const double dx = x - static_cast<double>(v) * step;
      out_[p] = dx * dx + f_[v];
    }
  }

 private:
  std::vector<double> f_;
  std::vector<double> out_;
  std::vector<std::size_t> vertex_;
  std::vector<double> bound_;
};

void transform_axis(std::vector<double>& sq, const Dims& dims, int axis, double step) {
  const std::size_t n = dims[axis];
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? dims[0] : dims[0] * dims[1];
  const std::size_t lines = sq.size() / n;
  EnvelopeLine line(n);
  for (std::size_t l = 0; l < lines; ++l) {
    const std::size_t base = axis == 0   ? l * n
                             : axis == 1 ? (l % dims[0]) + (l / dims[0]) * dims[0] * dims[1]
                                         : l;
    for (std::size_t q = 0; q < n; ++q) line.input()[q] = sq[base + q * stride];
    line.run(step);
    for (std::size_t q = 0; q < n; ++q) sq[base + q * stride] = line.output()[q];
  }
}

}  // namespace

DistanceField::DistanceField(VolumeGeometry geometry, std::vector<double> distances, bool reference_empty)
    : geometry_(std::move(geometry)), distances_(std::move(distances)), reference_empty_(reference_empty) {
  if (distances_.size() != geometry_.voxel_count()) throw InvalidArgument("distance field size mismatch");
}

DistanceField edt(const BinaryMask& mask) {
  const auto& geometry = mask.geometry();
  if (mask.is_empty()) {
    return DistanceField(geometry, std::vector<double>(mask.size(), kInf), true);
  }
  std::vector<double> sq(mask.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = mask[i] ? 0.0 : kInf;
  for (int axis = 0; axis < 3; ++axis) transform_axis(sq, geometry.dims(), axis, geometry.spacing()[axis]);
  for (double& v : sq) v = std::sqrt(v);
  return DistanceField(geometry, std::move(sq), false);
}

}  // namespace voxelval
